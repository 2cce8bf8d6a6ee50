#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tdev/frame.hpp"

namespace tdev {

struct SmoothingConfig {
    std::size_t kernel_length = 11;  // must be odd
    std::map<std::string, std::size_t> per_feature_overrides;

    void validate() const;
};

// Normalized Hanning weights: w[n] = 0.5 - 0.5*cos(2*pi*n/(length-1)),
// rescaled to sum 1. Length 1 yields {1}.
std::vector<double> hanning_kernel(std::size_t length);

// Convolves each feature column with its kernel. Output keeps the input
// timestamps and shape. Boundaries use the truncated kernel renormalized
// over the valid overlap, so a constant column is a fixed point everywhere.
TimeSeriesFrame smooth(const TimeSeriesFrame& frame, const SmoothingConfig& config);

}  // namespace tdev
