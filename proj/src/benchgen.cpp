#include "benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hypersynth {

BenchmarkKind parse_benchmark_kind(const std::string& name) {
    if (name == "meet") return BenchmarkKind::Meet;
    if (name == "meetR" || name == "meetr") return BenchmarkKind::MeetR;
    if (name == "race-2" || name == "race2") return BenchmarkKind::Race2;
    if (name == "race-3" || name == "race3") return BenchmarkKind::Race3;
    if (name == "opac") return BenchmarkKind::Opac;
    if (name == "iso") return BenchmarkKind::Iso;
    if (name == "robust") return BenchmarkKind::Robust;
    if (name == "noninter") return BenchmarkKind::Noninter;
    throw BenchmarkError("unknown benchmark kind '" + name + "'");
}

std::string benchmark_kind_name(BenchmarkKind kind) {
    switch (kind) {
        case BenchmarkKind::Meet: return "meet";
        case BenchmarkKind::MeetR: return "meetR";
        case BenchmarkKind::Race2: return "race-2";
        case BenchmarkKind::Race3: return "race-3";
        case BenchmarkKind::Opac: return "opac";
        case BenchmarkKind::Iso: return "iso";
        case BenchmarkKind::Robust: return "robust";
        case BenchmarkKind::Noninter: return "noninter";
    }
    return "?";
}

uint32_t GridParams::agent_count() const {
    switch (kind) {
        case BenchmarkKind::Race3: return 3;
        case BenchmarkKind::Noninter: return 4;
        default: return 2;
    }
}

namespace {

// directions in action order: north, east, south, west
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {1, 0, -1, 0};
constexpr const char* kActionNames[4] = {"north", "east", "south", "west"};
constexpr int clockwise(int dir) { return (dir + 1) % 4; }

struct GridBuilder {
    const GridParams& g;
    std::vector<int> cell_index;  // (y * width + x) -> free-cell index or -1
    std::vector<Cell> cells;      // free cells

    explicit GridBuilder(const GridParams& params) : g(params) {
        cell_index.assign(g.width * g.height, -1);
        for (uint32_t y = 0; y < g.height; ++y)
            for (uint32_t x = 0; x < g.width; ++x) {
                Cell c{static_cast<int>(x), static_cast<int>(y)};
                if (std::find(g.obstacles.begin(), g.obstacles.end(), c) != g.obstacles.end())
                    continue;
                cell_index[y * g.width + x] = static_cast<int>(cells.size());
                cells.push_back(c);
            }
    }

    bool free_cell(int x, int y) const {
        if (x < 0 || y < 0 || x >= static_cast<int>(g.width) || y >= static_cast<int>(g.height))
            return false;
        return cell_index[static_cast<uint32_t>(y) * g.width + x] >= 0;
    }

    // destination of a move attempt (bumps stay put)
    int destination(int from_cell, int dir) const {
        Cell c = cells[static_cast<size_t>(from_cell)];
        int nx = c.x + kDx[dir], ny = c.y + kDy[dir];
        if (!free_cell(nx, ny)) return from_cell;
        return cell_index[static_cast<uint32_t>(ny) * g.width + nx];
    }

    int region_of(int cell) const {
        uint32_t bands = std::max<uint32_t>(g.regions, 1);
        uint32_t band_w = (g.width + bands - 1) / bands;
        return cells[static_cast<size_t>(cell)].x / static_cast<int>(band_w);
    }
};

double action_trap_probability(const GridParams& g, int dir) {
    if (g.kind != BenchmarkKind::Iso) return g.trap;
    // per-action failure probabilities, scaled around the configured mean
    static const double scale[4] = {0.4, 0.8, 1.2, 1.6};
    return std::min(0.9, g.trap * scale[dir]);
}

}  // namespace

GridParams default_params(BenchmarkKind kind, uint32_t width, uint32_t height) {
    GridParams g;
    g.kind = kind;
    g.width = width;
    g.height = height;
    g.slip = 0.1;
    const int w = static_cast<int>(width), h = static_cast<int>(height);

    // calibrated 4x4 layouts; larger grids reuse the same scheme scaled
    g.target = {w / 2, h / 2 - 1 < 0 ? 0 : h / 2 - 1};
    g.initials = {{0, 0}, {0, h - 1}};
    if (w == 4 && h == 4) g.target = {2, 1};
    g.obstacles = {{1, 1}, {1, 2}};
    if (w > 4 || h > 4) {
        g.obstacles.clear();
        // deterministic sparse obstacle pattern away from the border column
        for (int y = 1; y + 1 < h; ++y)
            for (int x = 1; x + 1 < w; ++x)
                if ((x * 7 + y * 13) % 11 == 3 && !(x == g.target.x && y == g.target.y))
                    g.obstacles.push_back({x, y});
    }

    switch (kind) {
        case BenchmarkKind::Meet:
        case BenchmarkKind::MeetR:
            g.trap = 0.04;
            break;
        case BenchmarkKind::Race2:
            g.trap = 0.02;
            g.obstacles = {{1, 2}};
            break;
        case BenchmarkKind::Race3:
            g.trap = 0.02;
            g.obstacles = {{1, 2}};
            g.initials = {{0, 0}, {0, h - 1}, {w - 1, h - 1}};
            break;
        case BenchmarkKind::Opac:
            g.trap = 0.05;
            g.initials = {{0, 0}, {1, 0}};
            g.obstacles = {};
            g.target = {w - 1, h - 1};
            break;
        case BenchmarkKind::Iso:
            g.trap = 0.05;
            g.initials = {{0, 0}, {0, h - 1}};
            g.obstacles = {{1, 1}};
            break;
        case BenchmarkKind::Robust:
            g.trap = 0.04;
            g.initials = {{0, 0}, {0, 0}};
            g.obstacles = {{1, 1}};
            break;
        case BenchmarkKind::Noninter:
            g.trap = 0.05;
            g.initials = {{0, 0}, {0, 0}, {w - 1, h - 1}, {w - 1, h - 1}};
            g.obstacles = {{1, 1}};
            g.target = {w - 1, 0};
            break;
    }
    return g;
}

Benchmark gen_benchmark(const GridParams& g) {
    for (const Cell& c : g.initials)
        if (std::find(g.obstacles.begin(), g.obstacles.end(), c) != g.obstacles.end())
            throw BenchmarkError("initial cell coincides with an obstacle");
    if (std::find(g.obstacles.begin(), g.obstacles.end(), g.target) != g.obstacles.end())
        throw BenchmarkError("target cell coincides with an obstacle");
    if (g.slip < 0 || g.slip >= 1 || g.trap < 0 || g.trap >= 1 || g.slip + g.trap >= 1)
        throw BenchmarkError("slip and trap probabilities must satisfy slip + trap < 1");
    if (g.initials.size() != g.agent_count())
        throw BenchmarkError("benchmark kind needs " + std::to_string(g.agent_count()) +
                             " initial cells");

    GridBuilder grid(g);
    const bool track_act = g.kind == BenchmarkKind::Opac;
    const bool track_slip = g.kind == BenchmarkKind::Robust;
    // per-cell copies: last-action echo (5 values) or slip flag (2 values)
    const uint32_t copies = track_act ? 5 : (track_slip ? 2 : 1);
    const uint32_t num_cells = static_cast<uint32_t>(grid.cells.size());
    const uint32_t trap_state = num_cells * copies;

    Mdp m;
    m.num_states = trap_state + 1;
    m.action_names = {kActionNames[0], kActionNames[1], kActionNames[2], kActionNames[3]};
    m.ap_names = {"T", "S", "goal"};
    if (track_slip) m.ap_names.push_back("sl");
    if (track_act) {
        m.ap_names.push_back("an");
        for (int d = 0; d < 4; ++d) m.ap_names.push_back(std::string("a") + kActionNames[d][0]);
    }
    uint32_t first_region_ap = m.num_aps();
    if (g.kind == BenchmarkKind::Opac)
        for (uint32_t r = 0; r * ((g.width + g.regions - 1) / g.regions) < g.width; ++r)
            m.ap_names.push_back("r" + std::to_string(r));

    auto state_of = [&](int cell, uint32_t copy) { return static_cast<StateId>(cell * copies + copy); };

    m.labels.assign(m.num_states, 0);
    auto ap_bit = [&](const std::string& name) { return uint64_t{1} << m.ap_id(name); };
    for (uint32_t cell = 0; cell < num_cells; ++cell) {
        uint64_t base = 0;
        if (grid.cells[cell] == g.target) base |= ap_bit("T") | ap_bit("goal");
        if (g.kind == BenchmarkKind::Opac)
            base |= uint64_t{1} << (first_region_ap + grid.region_of(static_cast<int>(cell)));
        for (uint32_t copy = 0; copy < copies; ++copy) {
            uint64_t lab = base;
            if (track_act) lab |= copy == 0 ? ap_bit("an") : ap_bit(std::string("a") + kActionNames[copy - 1][0]);
            if (track_slip && copy == 1) lab |= ap_bit("sl");
            m.labels[state_of(static_cast<int>(cell), copy)] = lab;
        }
    }
    // the trap carries S; for opacity it is a wildcard for the comparisons
    m.labels[trap_state] = ap_bit("S");
    if (track_act) {
        m.labels[trap_state] |= ap_bit("an");
        for (int d = 0; d < 4; ++d) m.labels[trap_state] |= ap_bit(std::string("a") + kActionNames[d][0]);
    }
    if (g.kind == BenchmarkKind::Opac)
        for (uint32_t r = first_region_ap; r < m.num_aps(); ++r) m.labels[trap_state] |= uint64_t{1} << r;

    m.enabled.resize(m.num_states);
    m.rows.resize(m.num_states);
    const bool cost_model = g.kind == BenchmarkKind::MeetR;
    if (cost_model) {
        m.rewards = RewardStructure{};
        m.rewards->values.resize(m.num_states);
    }
    for (uint32_t cell = 0; cell < num_cells; ++cell) {
        for (uint32_t copy = 0; copy < copies; ++copy) {
            StateId s = state_of(static_cast<int>(cell), copy);
            for (int dir = 0; dir < 4; ++dir) {
                double p_trap = action_trap_probability(g, dir);
                int straight = grid.destination(static_cast<int>(cell), dir);
                int slipped = grid.destination(static_cast<int>(cell), clockwise(dir));
                uint32_t copy_straight = track_act ? static_cast<uint32_t>(dir) + 1 : copy;
                uint32_t copy_slipped = track_act ? static_cast<uint32_t>(dir) + 1 : copy;
                if (track_slip) {
                    copy_straight = 0;
                    copy_slipped = 1;
                }
                Distribution d;
                if (p_trap > 0) d.support.push_back({trap_state, p_trap});
                double p_straight = (1.0 - p_trap) * (1.0 - g.slip);
                double p_slip = (1.0 - p_trap) * g.slip;
                if (p_straight > 0)
                    d.support.push_back({state_of(straight, copy_straight), p_straight});
                if (p_slip > 0) d.support.push_back({state_of(slipped, copy_slipped), p_slip});
                d.normalize_layout();
                m.enabled[s].push_back(static_cast<ActionId>(dir));
                m.rows[s].push_back(std::move(d));
                if (cost_model) m.rewards->values[s].push_back(1.0);
            }
        }
    }
    m.enabled[trap_state] = {0};
    m.rows[trap_state] = {Distribution{{{trap_state, 1.0}}}};
    if (cost_model) m.rewards->values[trap_state] = {0.0};

    // specification text
    std::ostringstream spec;
    auto init_state = [&](uint32_t agent) {
        const Cell& c = g.initials[agent];
        int cell = grid.cell_index[static_cast<uint32_t>(c.y) * g.width + c.x];
        return state_of(cell, 0);
    };
    switch (g.kind) {
        case BenchmarkKind::Meet:
        case BenchmarkKind::MeetR:
            spec << "exists (p1 p2)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p2)\n";
            if (g.kind == BenchmarkKind::Meet)
                spec << "Pmax [ F (T@x1 & T@x2) ]\n";
            else
                spec << "Rmin{default@x1} [ (T@x1 & T@x2) | (S@x1 & S@x2) ]\n";
            break;
        case BenchmarkKind::Race2:
            spec << "exists (p1 p2)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p2)\n";
            spec << "Pmax [ F T@x1 & F T@x2 & G (T@x1 -> T@x2) ]\n";
            break;
        case BenchmarkKind::Race3:
            spec << "exists (p1 p2 p3)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p2)\n";
            spec << "forall x3 in {" << init_state(2) << "} (p3)\n";
            spec << "Pmax [ F T@x1 & F T@x2 & F T@x3 & G (T@x1 -> T@x2) & G (T@x2 -> T@x3) ]\n";
            break;
        case BenchmarkKind::Opac: {
            spec << "exists (p1 p2)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p2)\n";
            std::string act_eq = "(an@x1 & an@x2)";
            for (int d = 0; d < 4; ++d) {
                std::string ap = std::string("a") + kActionNames[d][0];
                act_eq += " | (" + ap + "@x1 & " + ap + "@x2)";
            }
            std::string reg_eq;
            for (uint32_t r = first_region_ap; r < m.num_aps(); ++r) {
                std::string ap = m.ap_names[r];
                reg_eq += (reg_eq.empty() ? "" : " | ") + ("(" + ap + "@x1 & " + ap + "@x2)");
            }
            spec << "Pmax [ !G (" << act_eq << ") & G (" << reg_eq << ") & F T@x1 & F T@x2 ]\n";
            break;
        }
        case BenchmarkKind::Iso:
            spec << "exists (p1)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p1)\n";
            spec << "Pmax [ ((!T@x1 & !T@x2) U (T@x1 & T@x2)) | "
                    "((!S@x1 & !S@x2 & !T@x1 & !T@x2) U (S@x1 & S@x2)) ]\n";
            break;
        case BenchmarkKind::Robust:
            spec << "exists (p1)\n";
            spec << "forall x1 in {" << init_state(0) << "} (p1)\n";
            spec << "forall x2 in {" << init_state(1) << "} (p1)\n";
            spec << "Pmax [ (F T@x1 & F T@x2) & ((F sl@x1 ^ F sl@x2) -> "
                    "((!T@x1 & !T@x2) U (T@x1 & T@x2))) ]\n";
            break;
        case BenchmarkKind::Noninter:
            spec << "exists (pa pb pc)\n";
            spec << "forall x1 in {" << init_state(0) << "} (pa)\n";
            spec << "forall x2 in {" << init_state(1) << "} (pa)\n";
            spec << "forall x3 in {" << init_state(2) << "} (pb)\n";
            spec << "forall x4 in {" << init_state(3) << "} (pc)\n";
            spec << "Pmax [ ((!goal@x1) U goal@x3) ^ ((!goal@x2) U goal@x4) ]\n";
            break;
    }

    Benchmark b;
    b.params = g;
    b.model = std::move(m);
    b.spec_text = spec.str();
    return b;
}

std::string Benchmark::metadata_json() const {
    std::ostringstream out;
    out << "{\n";
    out << "  \"name\": \"" << benchmark_kind_name(params.kind) << "-" << params.width << "x"
        << params.height << "\",\n";
    out << "  \"kind\": \"" << benchmark_kind_name(params.kind) << "\",\n";
    out << "  \"width\": " << params.width << ",\n";
    out << "  \"height\": " << params.height << ",\n";
    out << "  \"slip\": " << params.slip << ",\n";
    out << "  \"trap\": " << params.trap << ",\n";
    out << "  \"target\": [" << params.target.x << ", " << params.target.y << "],\n";
    out << "  \"obstacles\": [";
    for (size_t i = 0; i < params.obstacles.size(); ++i)
        out << (i ? ", " : "") << "[" << params.obstacles[i].x << ", " << params.obstacles[i].y << "]";
    out << "],\n";
    out << "  \"initials\": [";
    for (size_t i = 0; i < params.initials.size(); ++i)
        out << (i ? ", " : "") << "[" << params.initials[i].x << ", " << params.initials[i].y << "]";
    out << "],\n";
    out << "  \"model_states\": " << model.num_states << ",\n";
    if (reference) {
        out << "  \"reference\": {\"random\": " << reference->random
            << ", \"upper\": " << reference->upper << ", \"value\": " << reference->value
            << ", \"tolerance\": " << reference->tolerance << "}\n";
    } else {
        out << "  \"reference\": null\n";
    }
    out << "}\n";
    return out.str();
}

Benchmark gen_named_benchmark(const std::string& kind, uint32_t width, uint32_t height) {
    BenchmarkKind k = parse_benchmark_kind(kind);
    Benchmark b = gen_benchmark(default_params(k, width, height));
    if (width == 4 && height == 4) {
        if (k == BenchmarkKind::Meet) b.reference = ReferenceValues{0.10, 0.66, 0.63, 0.03};
        if (k == BenchmarkKind::Race2) b.reference = ReferenceValues{0.20, 0.80, 0.70, 0.05};
    }
    return b;
}

}  // namespace hypersynth
