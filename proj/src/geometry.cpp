#include "detfuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "detfuse/error.hpp"

namespace detfuse {

Box::Box(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw ContractError("box coordinates must be finite");
  }
  if (x1 > x2 || y1 > y2) {
    std::ostringstream msg;
    msg << "inverted box " << *this;
    throw ContractError(msg.str());
  }
}

Box Box::translated(double dx, double dy) const {
  return Box(x1_ + dx, y1_ + dy, x2_ + dx, y2_ + dy);
}

Box Box::scaled(double s) const {
  if (!(s > 0.0)) throw ContractError("scale factor must be positive");
  return Box(x1_ * s, y1_ * s, x2_ * s, y2_ * s);
}

std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << '(' << b.x1() << ',' << b.y1() << ',' << b.x2() << ',' << b.y2() << ')';
}

double area(const Box& b) noexcept { return b.width() * b.height(); }

double iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = area(a) + area(b) - inter;
  if (!(uni > 0.0)) return 0.0;
  // Rounding can push the ratio a hair past 1 for near-identical boxes.
  return std::min(1.0, inter / uni);
}

}  // namespace detfuse
