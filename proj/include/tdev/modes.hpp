#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdev/distances.hpp"
#include "tdev/windowing.hpp"

namespace tdev {

// Recurring multivariate patterns ("time-series words"). Exemplars are kept
// in creation order; pairwise exemplar distances exceed assignment_radius.
struct PatternCodebook {
    std::vector<Window> exemplars;
    double assignment_radius = 0.0;
    DistanceSpec measure;
};

// Single leader pass in time order: a window within radius of an existing
// exemplar is absorbed, otherwise it becomes a new exemplar. Order-dependent
// but cheap; identical input order gives identical exemplars.
PatternCodebook build_codebook(const std::vector<Window>& windows, const DistanceSpec& measure,
                               double radius);

struct BlockFrequencies {
    TimePoint block_start = 0;
    TimePoint block_end = 0;
    std::vector<std::size_t> counts;  // one per exemplar
    std::size_t overflow = 0;         // windows beyond radius of every exemplar
};

// Assigns each window to its nearest exemplar (overflow if beyond radius)
// and accumulates counts per time block. Blocks partition the span from the
// first window's start in steps of `block`.
std::vector<BlockFrequencies> word_frequencies(const std::vector<Window>& windows,
                                               const PatternCodebook& codebook, Duration block);

struct ModeAssignment {
    struct Block {
        TimePoint start = 0;
        TimePoint end = 0;
        std::vector<double> frequencies;
        std::size_t cluster = 0;
    };
    std::vector<Block> blocks;
    std::size_t cluster_count = 0;
};

// Seeded k-means on the given frequency vectors (normalized to proportions
// internally): farthest-point initialization, 100-iteration cap,
// convergence when assignments fix, empty clusters reseeded to the point
// farthest from its center. Returns one cluster id per vector.
std::vector<std::size_t> cluster_modes(const std::vector<std::vector<double>>& frequencies,
                                       std::size_t k, std::uint64_t seed);

// word_frequencies + cluster_modes, keeping block intervals attached. The
// clustered vectors are exemplar counts with the overflow bin appended, so
// novel behavior stays visible in the mode map.
ModeAssignment assign_modes(const std::vector<BlockFrequencies>& frequencies, std::size_t k,
                            std::uint64_t seed);

void write_frequencies_csv(const std::string& path, const std::vector<BlockFrequencies>& blocks);
void write_modes_csv(const std::string& path, const ModeAssignment& modes);

}  // namespace tdev
