#pragma once

#include <iosfwd>

namespace detfuse {

/// Axis-aligned rectangle in continuous pixel coordinates.
///
/// (x1, y1) is the top-left corner, (x2, y2) the bottom-right. Construction
/// rejects non-finite coordinates and inverted extents with ContractError;
/// zero-width or zero-height boxes are valid and have area 0.
class Box {
 public:
  Box() = default;
  Box(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }

  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }

  Box translated(double dx, double dy) const;
  Box scaled(double s) const;

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 0.0;
  double y2_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

double area(const Box& b) noexcept;

/// Intersection over union. Edge contact has zero intersection; two boxes
/// whose union has zero area give 0 rather than NaN.
double iou(const Box& a, const Box& b) noexcept;

}  // namespace detfuse
