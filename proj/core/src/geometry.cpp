#include "prob/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "prob/error.hpp"

namespace prob {

Corners to_corners(const Box& b) {
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
    throw DomainError("box has non-finite coordinates");
  }
  if (b.w < 0.0 || b.h < 0.0) throw DomainError("box has negative width or height");
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w, b.cy + 0.5 * b.h};
}

Box to_center(const Corners& c) {
  if (!std::isfinite(c.x1) || !std::isfinite(c.y1) || !std::isfinite(c.x2) || !std::isfinite(c.y2)) {
    throw DomainError("corners are non-finite");
  }
  if (c.x2 < c.x1 || c.y2 < c.y1) throw DomainError("corners are inverted");
  return {0.5 * (c.x1 + c.x2), 0.5 * (c.y1 + c.y2), c.x2 - c.x1, c.y2 - c.y1};
}

double area(const Box& b) { return b.w * b.h; }

namespace {

struct Overlap {
  Corners a, b;
  double iw, ih, inter, uni, cw, ch, hull;
};

Overlap overlap(const Box& box_a, const Box& box_b) {
  Overlap o{};
  o.a = to_corners(box_a);
  o.b = to_corners(box_b);
  o.iw = std::min(o.a.x2, o.b.x2) - std::max(o.a.x1, o.b.x1);
  o.ih = std::min(o.a.y2, o.b.y2) - std::max(o.a.y1, o.b.y1);
  o.inter = (o.iw > 0.0 && o.ih > 0.0) ? o.iw * o.ih : 0.0;
  // Areas from the same corners as the intersection, so identical boxes give IoU 1 exactly.
  o.uni = (o.a.x2 - o.a.x1) * (o.a.y2 - o.a.y1) + (o.b.x2 - o.b.x1) * (o.b.y2 - o.b.y1) - o.inter;
  o.cw = std::max(o.a.x2, o.b.x2) - std::min(o.a.x1, o.b.x1);
  o.ch = std::max(o.a.y2, o.b.y2) - std::min(o.a.y1, o.b.y1);
  o.hull = o.cw * o.ch;
  return o;
}

}  // namespace

double box_iou(const Box& a, const Box& b) {
  const Overlap o = overlap(a, b);
  if (o.uni <= 0.0) return 0.0;
  return o.inter / o.uni;
}

double box_giou(const Box& a, const Box& b) {
  const Overlap o = overlap(a, b);
  if (o.hull <= 0.0) throw DomainError("gIoU undefined: enclosing box has zero area");
  const double iou = o.uni > 0.0 ? o.inter / o.uni : 0.0;
  return iou - (o.hull - o.uni) / o.hull;
}

std::array<double, 4> box_giou_grad(const Box& box_a, const Box& box_b) {
  const Overlap o = overlap(box_a, box_b);
  if (o.hull <= 0.0 || o.uni <= 0.0) throw DomainError("gIoU gradient undefined for degenerate boxes");

  const double U = o.uni, I = o.inter, C = o.hull;
  const double d_inter = 1.0 / U + I / (U * U) - 1.0 / C;
  const double d_area_a = -I / (U * U) + 1.0 / C;
  const double d_hull = -U / (C * C);

  const Corners& a = o.a;
  const Corners& b = o.b;
  const double aw = a.x2 - a.x1, ah = a.y2 - a.y1;
  const bool overlapping = o.iw > 0.0 && o.ih > 0.0;

  // Gradients with respect to the corners of a.
  double gx1 = d_area_a * -ah, gx2 = d_area_a * ah;
  double gy1 = d_area_a * -aw, gy2 = d_area_a * aw;
  if (overlapping) {
    if (a.x1 >= b.x1) gx1 += d_inter * -o.ih;
    if (a.x2 <= b.x2) gx2 += d_inter * o.ih;
    if (a.y1 >= b.y1) gy1 += d_inter * -o.iw;
    if (a.y2 <= b.y2) gy2 += d_inter * o.iw;
  }
  if (a.x1 <= b.x1) gx1 += d_hull * -o.ch;
  if (a.x2 >= b.x2) gx2 += d_hull * o.ch;
  if (a.y1 <= b.y1) gy1 += d_hull * -o.cw;
  if (a.y2 >= b.y2) gy2 += d_hull * o.cw;

  return {gx1 + gx2, gy1 + gy2, 0.5 * (gx2 - gx1), 0.5 * (gy2 - gy1)};
}

}  // namespace prob
