#include "quasidiff/scale.hpp"

#include <algorithm>
#include <sstream>

namespace qd {

double Segment::at(double x) const {
    if (slope == 0.0) return value;
    if (std::isinf(x)) return x > 0 ? kInf : -kInf;
    return value + slope * (x - anchor());
}

ScaleFunction ScaleFunction::identity(double l, double r) {
    Segment s;
    s.x0 = l;
    s.x1 = r;
    s.value = std::isinf(l) ? r : l;
    s.slope = 1.0;
    if (std::isinf(l) && std::isinf(r)) s.value = 0.0;
    return build({s}, {});
}

ScaleFunction ScaleFunction::build(std::vector<Segment> segments, std::vector<Breakpoint> jumps) {
    if (segments.empty()) throw ValidationError("scale: no segments");
    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.x0 < b.x0; });
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.x0 < s.x1)) throw ValidationError("scale: empty or reversed segment");
        if (s.slope < 0.0 || std::isnan(s.slope)) throw ValidationError("scale: decreasing segment");
        if (std::isinf(s.x0) && std::isinf(s.x1) && s.slope != 0.0 && segments.size() > 1)
            throw ValidationError("scale: unbounded segment in the middle");
        if (i > 0 && !same_value(segments[i - 1].x1, s.x0))
            throw ValidationError("scale: segments do not tile the interval");
        if (i > 0) segments[i].x0 = segments[i - 1].x1;
        if (std::isinf(s.x0) && i > 0) throw ValidationError("scale: -inf only allowed at the left end");
        if (std::isinf(s.x1) && i + 1 < segments.size()) throw ValidationError("scale: inf only allowed at the right end");
    }
    for (const auto& j : jumps) {
        bool found = false;
        for (std::size_t i = 0; i + 1 < segments.size(); ++i)
            if (same_value(segments[i].x1, j.x)) found = true;
        if (!found) {
            std::ostringstream os;
            os << "scale: jump at x=" << j.x << " is not at a segment boundary";
            throw ValidationError(os.str());
        }
    }
    auto find_jump = [&](double x) -> const Breakpoint* {
        for (const auto& j : jumps)
            if (same_value(j.x, x)) return &j;
        return nullptr;
    };
    // merge adjacent flats carrying the same value
    std::vector<Segment> merged;
    for (const auto& s : segments) {
        if (!merged.empty() && merged.back().flat() && s.flat() && same_value(merged.back().value, s.value)) {
            const Breakpoint* j = find_jump(s.x0);
            if (!j || same_value(j->value, s.value)) {
                merged.back().x1 = s.x1;
                continue;
            }
        }
        merged.push_back(s);
    }
    ScaleFunction f;
    f.segs_ = merged;
    for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
        Breakpoint b;
        b.x = merged[i].x1;
        b.left = merged[i].end();
        b.right = merged[i + 1].start();
        std::ostringstream os;
        if (const Breakpoint* j = find_jump(b.x)) {
            if (!same_value(j->left, b.left) || !same_value(j->right, b.right)) {
                os << "scale: jump limits at x=" << b.x << " disagree with the adjacent segments";
                throw ValidationError(os.str());
            }
            if (j->value < b.left && !same_value(j->value, b.left)) throw ValidationError("scale: s(x) < s(x-) at a jump");
            if (j->value > b.right && !same_value(j->value, b.right)) throw ValidationError("scale: s(x) > s(x+) at a jump");
            b.value = j->value;
        } else {
            if (!same_value(b.left, b.right)) {
                os << "scale: discontinuity at x=" << b.x << " without a jump triple";
                throw ValidationError(os.str());
            }
            b.value = b.left;
        }
        if (b.right < b.left && !same_value(b.left, b.right)) throw ValidationError("scale: not nondecreasing");
        f.bps_.push_back(b);
    }
    // flats must carry pairwise distinct values
    auto fl = f.flats();
    for (std::size_t i = 0; i < fl.size(); ++i)
        for (std::size_t k = i + 1; k < fl.size(); ++k)
            if (same_value(fl[i].value, fl[k].value))
                throw ValidationError("scale: flat intervals share the value C_n");
    return f;
}

std::vector<FlatInterval> ScaleFunction::flats() const {
    std::vector<FlatInterval> out;
    for (const auto& s : segs_)
        if (s.flat() && std::isfinite(s.x0) && std::isfinite(s.x1)) out.push_back({s.x0, s.x1, s.value});
    return out;
}

std::vector<Breakpoint> ScaleFunction::jumps() const {
    std::vector<Breakpoint> out;
    for (const auto& b : bps_)
        if (b.jump()) out.push_back(b);
    return out;
}

std::size_t ScaleFunction::segment_index(double x) const {
    auto it = std::upper_bound(segs_.begin(), segs_.end(), x, [](double v, const Segment& s) { return v < s.x0; });
    if (it == segs_.begin()) return 0;
    return static_cast<std::size_t>(it - segs_.begin()) - 1;
}

const Breakpoint* ScaleFunction::breakpoint_at(double x) const {
    auto it = std::lower_bound(bps_.begin(), bps_.end(), x, [](const Breakpoint& b, double v) { return b.x < v; });
    if (it != bps_.end() && same_value(it->x, x)) return &*it;
    if (it != bps_.begin() && same_value(std::prev(it)->x, x)) return &*std::prev(it);
    return nullptr;
}

double ScaleFunction::value(double x) const {
    if (const Breakpoint* b = breakpoint_at(x)) return b->value;
    return segs_[segment_index(x)].at(x);
}

double ScaleFunction::left_limit(double x) const {
    if (const Breakpoint* b = breakpoint_at(x)) return b->left;
    return segs_[segment_index(x)].at(x);
}

double ScaleFunction::right_limit(double x) const {
    if (const Breakpoint* b = breakpoint_at(x)) return b->right;
    return segs_[segment_index(x)].at(x);
}

}  // namespace qd
