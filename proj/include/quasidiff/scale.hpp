#pragma once

#include "quasidiff/numeric.hpp"

#include <vector>

namespace qd {

// s(x) = value + slope * (x - anchor) on [x0, x1], anchor = x0 if finite, else x1.
struct Segment {
    double x0 = 0.0, x1 = 0.0;
    double value = 0.0;
    double slope = 1.0;

    double anchor() const { return std::isinf(x0) ? (std::isinf(x1) ? 0.0 : x1) : x0; }
    double at(double x) const;
    double start() const { return at(x0); }
    double end() const { return at(x1); }
    bool flat() const { return slope == 0.0; }
};

// Interior breakpoint: s(x-), s(x), s(x+).
struct Breakpoint {
    double x = 0.0;
    double left = 0.0, value = 0.0, right = 0.0;
    bool jump() const { return !same_value(left, value) || !same_value(value, right); }
};

struct FlatInterval {
    double a = 0.0, b = 0.0, value = 0.0;
};

class ScaleFunction {
  public:
    ScaleFunction() = default;
    // Segments must tile [l, r) without overlap; jumps are given at segment boundaries.
    static ScaleFunction build(std::vector<Segment> segments, std::vector<Breakpoint> jumps);
    static ScaleFunction identity(double l, double r);

    const std::vector<Segment>& segments() const { return segs_; }
    const std::vector<Breakpoint>& breakpoints() const { return bps_; }
    std::vector<FlatInterval> flats() const;
    std::vector<Breakpoint> jumps() const;

    double left_end() const { return segs_.front().x0; }
    double right_end() const { return segs_.back().x1; }

    double value(double x) const;
    double left_limit(double x) const;
    double right_limit(double x) const;
    // Index of the segment containing x (boundary points go to the right segment).
    std::size_t segment_index(double x) const;
    const Breakpoint* breakpoint_at(double x) const;

  private:
    std::vector<Segment> segs_;
    std::vector<Breakpoint> bps_;
};

}  // namespace qd
