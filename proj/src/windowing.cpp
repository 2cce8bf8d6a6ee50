#include "tdev/windowing.hpp"

#include <algorithm>
#include <stdexcept>

namespace tdev {

void WindowSpec::validate() const {
    if (length == 0) throw std::invalid_argument("window length must be positive");
    if (stride == 0) throw std::invalid_argument("window stride must be positive");
    if (stride > length && !allow_gaps) {
        throw std::invalid_argument("stride " + std::to_string(stride) + " exceeds length " +
                                    std::to_string(length) +
                                    " (set allow_gaps to disable overlap)");
    }
    if (history_depth && *history_depth == 0) {
        throw std::invalid_argument("history_depth must be >= 1 when present");
    }
}

Window::Window(std::shared_ptr<const TimeSeriesFrame> frame, std::size_t origin,
               std::size_t length, std::vector<std::size_t> feature_cols, std::string spec_id)
    : frame_(std::move(frame)),
      origin_(origin),
      length_(length),
      feature_cols_(std::move(feature_cols)),
      spec_id_(std::move(spec_id)) {}

std::vector<double> Window::dimension(std::size_t dim) const {
    std::vector<double> out(length_);
    for (std::size_t i = 0; i < length_; ++i) out[i] = value(i, dim);
    return out;
}

std::vector<Window> slice_windows(std::shared_ptr<const TimeSeriesFrame> frame,
                                  const WindowSpec& spec) {
    spec.validate();
    if (!frame) throw std::invalid_argument("slice_windows requires a frame");
    if (frame->rows() < spec.length) {
        throw std::invalid_argument("frame with " + std::to_string(frame->rows()) +
                                    " rows is shorter than window length " +
                                    std::to_string(spec.length));
    }

    std::vector<std::size_t> cols;
    if (spec.feature_subset) {
        for (const auto& name : *spec.feature_subset) {
            for (std::size_t c = 0; c < frame->feature_count(); ++c) {
                if (frame->feature_names[c] == name) {
                    cols.push_back(c);
                    break;
                }
            }
        }
        if (cols.empty()) {
            throw std::invalid_argument("feature subset of spec '" + spec.id +
                                        "' does not intersect the frame's features");
        }
    } else {
        cols.resize(frame->feature_count());
        for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = c;
    }

    std::vector<Window> windows;
    for (std::size_t origin = 0; origin + spec.length <= frame->rows(); origin += spec.stride) {
        if (!spec.restriction_mask.empty()) {
            const TimePoint s = frame->timestamps[origin];
            const TimePoint e = frame->timestamps[origin + spec.length - 1];
            bool inside = false;
            for (const auto& [ms, me] : spec.restriction_mask) {
                if (ms <= s && e <= me) {
                    inside = true;
                    break;
                }
            }
            if (!inside) continue;
        }
        windows.emplace_back(frame, origin, spec.length, cols, spec.id);
    }
    return windows;
}

std::pair<std::size_t, std::size_t> preceding_range(const Window& target,
                                                    const std::vector<Window>& all,
                                                    std::optional<std::size_t> history_depth) {
    // Uniform-length lists only: origin + length is then monotone in index,
    // so the qualifying windows form a prefix.
    std::size_t last = 0;
    while (last < all.size() && all[last].origin() + all[last].length() <= target.origin()) {
        ++last;
    }
    std::size_t first = 0;
    if (history_depth && last > *history_depth) first = last - *history_depth;
    return {first, last};
}

std::vector<Window> preceding_windows(const Window& target, const std::vector<Window>& all,
                                      std::optional<std::size_t> history_depth) {
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (all[i].origin() < all[i - 1].origin()) {
            throw std::invalid_argument("preceding_windows requires windows sorted by origin");
        }
    }
    std::vector<Window> out;
    for (const Window& w : all) {
        if (w.origin() + w.length() <= target.origin()) out.push_back(w);
    }
    if (history_depth && out.size() > *history_depth) {
        out.erase(out.begin(),
                  out.begin() + static_cast<std::ptrdiff_t>(out.size() - *history_depth));
    }
    return out;
}

}  // namespace tdev
