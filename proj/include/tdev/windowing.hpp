#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdev/frame.hpp"

namespace tdev {

struct WindowSpec {
    std::size_t length = 0;
    std::size_t stride = 1;
    std::optional<std::size_t> history_depth;
    std::optional<std::vector<std::string>> feature_subset;
    // When nonempty, only windows fully inside one of these intervals are
    // generated (expert masks or the output of another risk model).
    std::vector<std::pair<TimePoint, TimePoint>> restriction_mask;
    bool allow_gaps = false;  // permits stride > length
    std::string id = "w0";

    void validate() const;
};

// A contiguous multivariate slice of a parent frame, held as an index range
// rather than a copy. Copies happen only inside distance kernels that need
// contiguous storage.
class Window {
public:
    Window(std::shared_ptr<const TimeSeriesFrame> frame, std::size_t origin, std::size_t length,
           std::vector<std::size_t> feature_cols, std::string spec_id);

    std::size_t origin() const { return origin_; }
    std::size_t length() const { return length_; }
    std::size_t feature_count() const { return feature_cols_.size(); }
    TimePoint start_ts() const { return frame_->timestamps[origin_]; }
    TimePoint end_ts() const { return frame_->timestamps[origin_ + length_ - 1]; }
    const std::string& spec_id() const { return spec_id_; }
    const TimeSeriesFrame& frame() const { return *frame_; }

    double value(std::size_t sample, std::size_t dim) const {
        return frame_->at(origin_ + sample, feature_cols_[dim]);
    }
    const std::string& feature_name(std::size_t dim) const {
        return frame_->feature_names[feature_cols_[dim]];
    }
    std::vector<double> dimension(std::size_t dim) const;

private:
    std::shared_ptr<const TimeSeriesFrame> frame_;
    std::size_t origin_;
    std::size_t length_;
    std::vector<std::size_t> feature_cols_;
    std::string spec_id_;
};

// Windows at origins 0, stride, 2*stride, ... while origin + length fits.
// With a restriction mask, only windows fully inside a masked interval are
// emitted. Throws when the frame is shorter than the window length or the
// feature subset does not intersect the frame's features.
std::vector<Window> slice_windows(std::shared_ptr<const TimeSeriesFrame> frame,
                                  const WindowSpec& spec);

// Windows that strictly precede the target without sharing rows
// (origin + length <= target.origin), most recent history_depth entries.
// `all` must be sorted by origin.
std::vector<Window> preceding_windows(const Window& target, const std::vector<Window>& all,
                                      std::optional<std::size_t> history_depth);

// Index form of preceding_windows used by the scoring loop: [first, last)
// range into `all` before history truncation is applied.
std::pair<std::size_t, std::size_t> preceding_range(const Window& target,
                                                    const std::vector<Window>& all,
                                                    std::optional<std::size_t> history_depth);

}  // namespace tdev
