#include "prob/plot.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "prob/error.hpp"
#include "prob/io.hpp"

namespace prob {

namespace {

constexpr double kPanelW = 320.0;
constexpr double kPanelH = 220.0;
constexpr double kMargin = 44.0;

std::string num(double v) { return format_number(v, 6); }

// Exact value text as it appears in the report JSON.
std::string verbatim(double v) { return nlohmann::json(v).dump(); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Point {
  double x, y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::vector<Point> points;
  bool step = false;  // draw as a recall/precision step curve
};

void draw_panel(std::ostringstream& svg, const Panel& p, double ox, double oy) {
  const double pw = kPanelW - 2 * kMargin, ph = kPanelH - 2 * kMargin;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (!p.step && !p.points.empty()) {
    auto [xmin, xmax] = std::minmax_element(p.points.begin(), p.points.end(),
                                            [](const Point& a, const Point& b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(p.points.begin(), p.points.end(),
                                            [](const Point& a, const Point& b) { return a.y < b.y; });
    x0 = xmin->x;
    x1 = xmax->x;
    y0 = std::min(0.0, ymin->y);
    y1 = ymax->y;
    if (x1 - x0 < 1e-12) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  }
  auto sx = [&](double x) { return ox + kMargin + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return oy + kMargin + ph - (y - y0) / (y1 - y0) * ph; };

  svg << "<g class=\"panel\">\n";
  svg << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy + 20) << "\" text-anchor=\"middle\">"
      << escape(p.title) << "</text>\n";
  svg << "<rect x=\"" << num(ox + kMargin) << "\" y=\"" << num(oy + kMargin) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy + kPanelH - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.x_label) << "</text>\n";
  svg << "<text x=\"" << num(ox + kMargin - 4) << "\" y=\"" << num(sy(y0)) << "\" text-anchor=\"end\" font-size=\"9\">"
      << num(y0) << "</text>\n";
  svg << "<text x=\"" << num(ox + kMargin - 4) << "\" y=\"" << num(sy(y1)) << "\" text-anchor=\"end\" font-size=\"9\">"
      << num(y1) << "</text>\n";

  if (!p.points.empty()) {
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    double prev_y = p.points.front().y;
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      const Point& pt = p.points[i];
      if (p.step && i > 0) svg << num(sx(pt.x)) << ',' << num(sy(prev_y)) << ' ';
      svg << num(sx(pt.x)) << ',' << num(sy(pt.y)) << (i + 1 < p.points.size() ? " " : "");
      prev_y = pt.y;
    }
    svg << "\"/>\n";
    if (!p.step) {
      for (const Point& pt : p.points) {
        svg << "<circle cx=\"" << num(sx(pt.x)) << "\" cy=\"" << num(sy(pt.y))
            << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        svg << "<text class=\"value\" x=\"" << num(sx(pt.x)) << "\" y=\"" << num(sy(pt.y) - 6)
            << "\" text-anchor=\"middle\" font-size=\"8\">" << verbatim(pt.y) << "</text>\n";
      }
    }
  }
  svg << "</g>\n";
}

std::string render(const std::string& title, const std::vector<Panel>& panels, int columns) {
  const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) /
                                    static_cast<std::size_t>(columns));
  const double width = kPanelW * columns;
  const double height = 30.0 + kPanelH * std::max(rows, 1);
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = kPanelW * static_cast<double>(i % static_cast<std::size_t>(columns));
    const double oy = 30.0 + kPanelH * static_cast<double>(i / static_cast<std::size_t>(columns));
    draw_panel(svg, panels[i], ox, oy);
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::string sweep_svg(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DomainError("sweep plot needs at least one report");
  std::vector<const EvalReport*> sorted;
  for (const EvalReport& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EvalReport* a, const EvalReport* b) { return a->settings.tau < b->settings.tau; });

  using Getter = std::optional<double> (*)(const EvalReport&);
  const std::pair<const char*, Getter> series[] = {
      {"U-Recall", [](const EvalReport& r) { return r.u_recall; }},
      {"Known mAP", [](const EvalReport& r) { return r.map_both; }},
      {"A-OSE", [](const EvalReport& r) { return std::optional<double>(static_cast<double>(r.a_ose)); }},
      {"WI", [](const EvalReport& r) { return r.wi; }},
  };
  std::vector<Panel> panels;
  for (const auto& [name, get] : series) {
    Panel p{name, "objectness temperature", {}, false};
    for (const EvalReport* r : sorted) {
      if (auto v = get(*r)) p.points.push_back({r->settings.tau, *v});
    }
    panels.push_back(std::move(p));
  }
  return render("Objectness temperature sweep (task " + std::to_string(sorted.front()->task) + ")", panels, 2);
}

std::string tasks_svg(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DomainError("task plot needs at least one report");
  using Getter = std::optional<double> (*)(const EvalReport&);
  const std::pair<const char*, Getter> series[] = {
      {"Previously known mAP", [](const EvalReport& r) { return r.map_prev; }},
      {"Current known mAP", [](const EvalReport& r) { return r.map_current; }},
      {"Both mAP", [](const EvalReport& r) { return r.map_both; }},
      {"U-Recall", [](const EvalReport& r) { return r.u_recall; }},
  };
  std::vector<Panel> panels;
  for (const auto& [name, get] : series) {
    Panel p{name, "task", {}, false};
    for (const EvalReport& r : reports) {
      if (auto v = get(r)) p.points.push_back({static_cast<double>(r.task), *v});
    }
    panels.push_back(std::move(p));
  }
  return render("Open-world metrics per task", panels, 2);
}

std::string pr_svg(const EvalReport& report) {
  std::vector<Panel> panels;
  for (const auto& [cls, points] : report.pr_curves) {
    Panel p{"class " + std::to_string(cls), "recall", {}, true};
    for (const PrPoint& pt : points) p.points.push_back({pt.recall, pt.precision});
    panels.push_back(std::move(p));
  }
  return render("Precision/recall (task " + std::to_string(report.task) + ")", panels, 3);
}

}  // namespace prob
