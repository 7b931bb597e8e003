#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdp.hpp"

namespace hypersynth {

class BenchmarkError : public std::runtime_error {
public:
    explicit BenchmarkError(const std::string& what) : std::runtime_error(what) {}
};

enum class BenchmarkKind { Meet, MeetR, Race2, Race3, Opac, Iso, Robust, Noninter };

BenchmarkKind parse_benchmark_kind(const std::string& name);
std::string benchmark_kind_name(BenchmarkKind kind);

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Grid-world family: four cardinal actions, slip deflects one step clockwise
/// of the intended course with the configured probability, every action traps
/// with the configured probability (per-action scaled for the iso variant),
/// moves into walls or obstacles stay put.
struct GridParams {
    BenchmarkKind kind = BenchmarkKind::Meet;
    uint32_t width = 4;
    uint32_t height = 4;
    std::vector<Cell> obstacles;
    double slip = 0.1;
    double trap = 0.02;
    std::vector<Cell> initials;  // one per agent
    Cell target{2, 1};
    uint32_t regions = 2;  // vertical bands (opacity)

    uint32_t agent_count() const;
};

struct ReferenceValues {
    double random = 0.0;
    double upper = 0.0;
    double value = 0.0;
    double tolerance = 0.03;
};

struct Benchmark {
    GridParams params;
    Mdp model;
    std::string spec_text;
    std::optional<ReferenceValues> reference;

    std::string metadata_json() const;
};

/// Calibrated parameter presets; the 4x4 instances ship reference values.
GridParams default_params(BenchmarkKind kind, uint32_t width, uint32_t height);

Benchmark gen_benchmark(const GridParams& params);

/// Convenience: preset + generation + reference lookup.
Benchmark gen_named_benchmark(const std::string& kind, uint32_t width, uint32_t height);

}  // namespace hypersynth
