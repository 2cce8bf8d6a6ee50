#include "tdev/smoothing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tdev {

void SmoothingConfig::validate() const {
    if (kernel_length % 2 == 0 || kernel_length == 0) {
        throw std::invalid_argument("kernel_length must be odd and >= 1, got " +
                                    std::to_string(kernel_length));
    }
    for (const auto& [name, length] : per_feature_overrides) {
        if (length % 2 == 0 || length == 0) {
            throw std::invalid_argument("kernel override for '" + name +
                                        "' must be odd and >= 1, got " + std::to_string(length));
        }
    }
}

std::vector<double> hanning_kernel(std::size_t length) {
    if (length == 0 || length % 2 == 0) {
        throw std::invalid_argument("Hanning kernel length must be odd and >= 1, got " +
                                    std::to_string(length));
    }
    if (length == 1) return {1.0};

    std::vector<double> weights(length);
    double sum = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        weights[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                          static_cast<double>(length - 1));
        sum += weights[n];
    }
    for (double& w : weights) w /= sum;
    return weights;
}

TimeSeriesFrame smooth(const TimeSeriesFrame& frame, const SmoothingConfig& config) {
    config.validate();
    if (frame.rows() == 0) throw std::invalid_argument("cannot smooth an empty frame");

    const std::size_t rows = frame.rows();
    const std::size_t k = frame.feature_count();
    TimeSeriesFrame out = frame;

    for (std::size_t c = 0; c < k; ++c) {
        std::size_t length = config.kernel_length;
        auto it = config.per_feature_overrides.find(frame.feature_names[c]);
        if (it != config.per_feature_overrides.end()) length = it->second;
        if (length > rows) {
            throw std::invalid_argument("kernel length " + std::to_string(length) +
                                        " exceeds series length " + std::to_string(rows) +
                                        " for feature '" + frame.feature_names[c] + "'");
        }
        if (length == 1) continue;

        const std::vector<double> kernel = hanning_kernel(length);
        const std::size_t half = length / 2;
        for (std::size_t r = 0; r < rows; ++r) {
            // Valid overlap of the centered kernel with the column.
            const std::size_t from = r >= half ? r - half : 0;
            const std::size_t to = std::min(rows - 1, r + half);
            double acc = 0.0, wsum = 0.0;
            for (std::size_t i = from; i <= to; ++i) {
                const double w = kernel[i + half - r];
                acc += w * frame.at(i, c);
                wsum += w;
            }
            out.at(r, c) = acc / wsum;
        }
    }
    return out;
}

}  // namespace tdev
