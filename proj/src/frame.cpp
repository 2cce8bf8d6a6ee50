#include "tdev/frame.hpp"

#include <stdexcept>
#include <unordered_set>

namespace tdev {

std::size_t TimeSeriesFrame::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i] == name) return i;
    }
    throw std::invalid_argument("unknown feature '" + name + "'");
}

void TimeSeriesFrame::validate() const {
    if (values.size() != timestamps.size() * feature_names.size()) {
        throw std::invalid_argument("frame value matrix does not match rows x features");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) {
            throw std::invalid_argument("duplicate feature name '" + name + "'");
        }
    }
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            throw std::invalid_argument("timestamps not strictly increasing at instant " +
                                        format_timestamp(timestamps[i]));
        }
    }
}

void validate_events(const std::vector<EventInterval>& events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].start > events[i].end) {
            throw std::invalid_argument("event interval with start after end at " +
                                        format_timestamp(events[i].start));
        }
        if (i > 0 && events[i].start <= events[i - 1].end) {
            throw std::invalid_argument("event intervals overlap or are unsorted at " +
                                        format_timestamp(events[i].start));
        }
    }
}

}  // namespace tdev
