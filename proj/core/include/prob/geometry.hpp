#pragma once

#include <array>

namespace prob {

/// Axis-aligned box in normalized center-size form (the detector's native
/// output). Corner form is derived on demand.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Box&, const Box&) = default;

  std::array<double, 4> as_array() const { return {cx, cy, w, h}; }
  static Box from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
};

struct Corners {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  friend bool operator==(const Corners&, const Corners&) = default;
};

/// Throws DomainError on negative or non-finite size.
Corners to_corners(const Box& b);
/// Throws DomainError when x2 < x1 or y2 < y1.
Box to_center(const Corners& c);

double area(const Box& b);

/// Intersection over union. Two zero-area boxes give 0.
double box_iou(const Box& a, const Box& b);

/// Generalized IoU in [-1, 1]. Throws DomainError if the enclosing box has
/// zero area.
double box_giou(const Box& a, const Box& b);

/// Partial derivatives of box_giou(a, b) with respect to a's center-size
/// coordinates (cx, cy, w, h). Subgradient choice at kinks: the edge of `a`
/// wins ties.
std::array<double, 4> box_giou_grad(const Box& a, const Box& b);

}  // namespace prob
