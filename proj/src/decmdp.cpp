#include "decmdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "probcheck.hpp"

namespace hypersynth {

namespace {

std::string joint_state_name(const ProductMdp& p, uint32_t s) {
    std::string name = "s";
    for (uint32_t i = 0; i < p.m; ++i) name += std::to_string(p.local(s, i)) + "_";
    name += "q" + std::to_string(p.state_q[s]);
    return name;
}

}  // namespace

void emit_dpomdp(const ProductMdp& p, const HyperFormula& spec, std::ostream& out) {
    if (!is_dec_fragment(spec))
        throw DecExportError("specification is outside the decentralized fragment");
    if (p.initials.size() != 1)
        throw DecExportError("decentralized export expects a single initial tuple");

    ActionRestriction full = ActionRestriction::full(p.agent, p.bindings.num_policy_vars);
    SuccessSet u = accepting_success_set(RestrictedProduct{&p, &full});

    out << "agents: " << p.m + 1 << "\n";
    out << "discount: 1.0\n";
    out << "values: reward\n";
    out << "states:";
    for (uint32_t s = 0; s < p.num_states; ++s) out << ' ' << joint_state_name(p, s);
    out << "\n";
    out << "start:\n";
    out.precision(17);
    for (uint32_t s = 0; s < p.num_states; ++s)
        out << (s ? " " : "") << (s == p.initials[0] ? 1.0 : 0.0);
    out << "\n";
    out << "actions:\n";
    for (uint32_t i = 0; i < p.m; ++i) {
        for (size_t a = 0; a < p.agent.action_names.size(); ++a)
            out << (a ? " " : "") << p.agent.action_names[a];
        out << "\n";
    }
    out << "tick\n";  // the automaton agent
    out << "observations:\n";
    for (uint32_t i = 0; i < p.m; ++i) {
        for (StateId s = 0; s < p.agent.num_states; ++s) out << (s ? " " : "") << 'l' << s;
        out << "\n";
    }
    for (uint32_t q = 0; q < p.dra.num_states; ++q) out << (q ? " " : "") << 'q' << q;
    out << "\n";

    // transitions; the success set is absorbing with reward 0
    for (uint32_t s = 0; s < p.num_states; ++s) {
        std::string sname = joint_state_name(p, s);
        if (u.states.test(s)) {
            out << "T: * : " << sname << " : " << sname << " : 1.0\n";
            continue;
        }
        for (uint32_t k = 0; k < p.num_rows(s); ++k) {
            uint32_t rowi = p.row_index(s, k);
            const ActionId* acts = p.actions_of_row(rowi);
            std::string ja;
            for (uint32_t i = 0; i < p.m; ++i) ja += p.agent.action_names[acts[i]] + " ";
            ja += "tick";
            for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e)
                out << "T: " << ja << " : " << sname << " : "
                    << joint_state_name(p, p.entries[e].target) << " : " << p.entries[e].prob
                    << "\n";
        }
    }

    // each agent observes exactly its own component
    for (uint32_t s = 0; s < p.num_states; ++s) {
        out << "O: * : " << joint_state_name(p, s) << " :";
        for (uint32_t i = 0; i < p.m; ++i) out << " l" << p.local(s, i);
        out << " q" << p.state_q[s] << " : 1.0\n";
    }

    // reward 1 on first entry into the success set
    for (uint32_t s = 0; s < p.num_states; ++s) {
        if (u.states.test(s)) continue;
        std::string sname = joint_state_name(p, s);
        std::vector<char> entered(p.num_states, 0);
        for (uint32_t k = 0; k < p.num_rows(s); ++k) {
            uint32_t rowi = p.row_index(s, k);
            for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e)
                if (u.states.test(p.entries[e].target)) entered[p.entries[e].target] = 1;
        }
        for (uint32_t t = 0; t < p.num_states; ++t)
            if (entered[t])
                out << "R: * : " << sname << " : " << joint_state_name(p, t) << " : * : 1.0\n";
    }
}

void export_dpomdp(const ProductMdp& p, const HyperFormula& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DecExportError("cannot open '" + path + "' for writing");
    emit_dpomdp(p, spec, out);
    if (!out) throw DecExportError("write failure on '" + path + "'");
}

// --- reader -----------------------------------------------------------------------

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    return out;
}

std::vector<std::string> split_colon(const std::string& line) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : line) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

uint32_t DecProblem::initial_state() const {
    uint32_t best = 0;
    for (uint32_t s = 1; s < start.size(); ++s)
        if (start[s] > start[best]) best = s;
    return best;
}

DecProblem parse_dpomdp(std::istream& in) {
    DecProblem dp;
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.push_back(line);
    }

    auto state_index = [&](const std::string& name) -> uint32_t {
        auto it = std::find(dp.state_names.begin(), dp.state_names.end(), name);
        if (it == dp.state_names.end()) throw DecExportError("unknown state '" + name + "'");
        return static_cast<uint32_t>(it - dp.state_names.begin());
    };

    size_t i = 0;
    bool agents_pending = false, obs_pending = false;
    size_t pending_rows = 0;
    // header pass
    struct TLine {
        std::vector<std::string> actions;  // empty = wildcard
        uint32_t from, to;
        double prob;
    };
    struct RLine {
        std::vector<std::string> actions;
        uint32_t from, to;
        double reward;
    };
    std::vector<TLine> tlines;
    std::vector<RLine> rlines;
    std::vector<std::pair<uint32_t, std::vector<std::string>>> olines;

    while (i < lines.size()) {
        std::string line = lines[i];
        if (agents_pending || obs_pending) {
            auto& target = agents_pending ? dp.agent_actions : dp.agent_observations;
            target.push_back(tokens_of(line));
            if (--pending_rows == 0) {
                agents_pending = obs_pending = false;
            }
            ++i;
            continue;
        }
        auto colon = line.find(':');
        std::string key = colon == std::string::npos ? "" : line.substr(0, colon);
        std::string rest = colon == std::string::npos ? "" : line.substr(colon + 1);
        if (key == "agents") {
            dp.num_agents = static_cast<uint32_t>(std::stoul(rest));
        } else if (key == "discount") {
            dp.discount = std::stod(rest);
        } else if (key == "values") {
            // reward assumed
        } else if (key == "states") {
            dp.state_names = tokens_of(rest);
            if (dp.state_names.size() == 1 &&
                std::all_of(dp.state_names[0].begin(), dp.state_names[0].end(), ::isdigit)) {
                size_t n = std::stoul(dp.state_names[0]);
                dp.state_names.clear();
                for (size_t s = 0; s < n; ++s) dp.state_names.push_back("s" + std::to_string(s));
            }
        } else if (key == "start") {
            auto toks = tokens_of(rest);
            if (toks.empty() && i + 1 < lines.size()) toks = tokens_of(lines[++i]);
            dp.start.clear();
            for (const auto& t : toks) dp.start.push_back(std::stod(t));
        } else if (key == "actions") {
            agents_pending = true;
            pending_rows = dp.num_agents;
        } else if (key == "observations") {
            obs_pending = true;
            pending_rows = dp.num_agents;
        } else if (key == "T") {
            auto parts = split_colon(line);
            if (parts.size() != 5) throw DecExportError("malformed T line: " + line);
            TLine t;
            auto acts = tokens_of(parts[1]);
            if (!(acts.size() == 1 && acts[0] == "*")) t.actions = acts;
            t.from = state_index(tokens_of(parts[2]).at(0));
            t.to = state_index(tokens_of(parts[3]).at(0));
            t.prob = std::stod(parts[4]);
            tlines.push_back(std::move(t));
        } else if (key == "O") {
            auto parts = split_colon(line);
            if (parts.size() != 5) throw DecExportError("malformed O line: " + line);
            if (std::stod(parts[4]) != 1.0)
                throw DecExportError("only deterministic observations are supported");
            olines.emplace_back(state_index(tokens_of(parts[2]).at(0)), tokens_of(parts[3]));
        } else if (key == "R") {
            auto parts = split_colon(line);
            if (parts.size() != 6) throw DecExportError("malformed R line: " + line);
            RLine r;
            auto acts = tokens_of(parts[1]);
            if (!(acts.size() == 1 && acts[0] == "*")) r.actions = acts;
            r.from = state_index(tokens_of(parts[2]).at(0));
            r.to = state_index(tokens_of(parts[3]).at(0));
            r.reward = std::stod(parts[5]);
            rlines.push_back(std::move(r));
        } else {
            throw DecExportError("unrecognized dpomdp line: " + line);
        }
        ++i;
    }
    if (dp.num_agents == 0 || dp.state_names.empty())
        throw DecExportError("dpomdp header incomplete");
    if (dp.agent_actions.size() != dp.num_agents || dp.agent_observations.size() != dp.num_agents)
        throw DecExportError("per-agent action/observation lists incomplete");

    // joint action space
    uint64_t num_joint = 1;
    for (const auto& acts : dp.agent_actions) num_joint *= acts.size();
    if (num_joint > 1u << 20) throw DecExportError("joint action space too large to materialize");
    Mdp& joint = dp.joint;
    joint.num_states = static_cast<uint32_t>(dp.state_names.size());
    for (uint64_t j = 0; j < num_joint; ++j) {
        uint64_t rest = j;
        std::vector<uint32_t> comp(dp.num_agents);
        for (uint32_t a = dp.num_agents; a-- > 0;) {
            comp[a] = static_cast<uint32_t>(rest % dp.agent_actions[a].size());
            rest /= dp.agent_actions[a].size();
        }
        std::string name;
        for (uint32_t a = 0; a < dp.num_agents; ++a)
            name += (a ? "/" : "") + dp.agent_actions[a][comp[a]];
        joint.action_names.push_back(name);
        dp.joint_action_components.push_back(std::move(comp));
    }

    auto joint_matches = [&](uint32_t ja, const std::vector<std::string>& pattern) {
        if (pattern.empty()) return true;
        if (pattern.size() != dp.num_agents) return false;
        for (uint32_t a = 0; a < dp.num_agents; ++a) {
            if (pattern[a] == "*") continue;
            if (dp.agent_actions[a][dp.joint_action_components[ja][a]] != pattern[a]) return false;
        }
        return true;
    };

    // accumulate transition rows and rewards
    std::vector<std::map<uint32_t, std::map<uint32_t, double>>> trans(joint.num_states);
    std::vector<std::map<uint32_t, double>> reward(joint.num_states);
    for (const TLine& t : tlines)
        for (uint32_t ja = 0; ja < num_joint; ++ja)
            if (joint_matches(ja, t.actions)) trans[t.from][ja][t.to] += t.prob;
    for (const RLine& r : rlines)
        for (uint32_t ja = 0; ja < num_joint; ++ja)
            if (joint_matches(ja, r.actions)) {
                auto it = trans[r.from].find(ja);
                double p = 0.0;
                if (it != trans[r.from].end()) {
                    auto jt = it->second.find(r.to);
                    if (jt != it->second.end()) p = jt->second;
                }
                reward[r.from][ja] += p * r.reward;
            }

    joint.enabled.resize(joint.num_states);
    joint.rows.resize(joint.num_states);
    joint.labels.assign(joint.num_states, 0);
    joint.rewards = RewardStructure{};
    joint.rewards->values.resize(joint.num_states);
    for (uint32_t s = 0; s < joint.num_states; ++s) {
        for (auto& [ja, row] : trans[s]) {
            Distribution d;
            for (auto& [t, p] : row) d.support.push_back({t, p});
            d.normalize_layout();
            joint.enabled[s].push_back(ja);
            joint.rows[s].push_back(std::move(d));
            auto it = reward[s].find(ja);
            joint.rewards->values[s].push_back(it == reward[s].end() ? 0.0 : it->second);
        }
    }

    // deterministic observation table
    dp.obs_of_state.assign(joint.num_states, std::vector<uint32_t>(dp.num_agents, 0));
    for (auto& [s, obs] : olines) {
        if (obs.size() != dp.num_agents) throw DecExportError("observation arity mismatch");
        for (uint32_t a = 0; a < dp.num_agents; ++a) {
            auto it = std::find(dp.agent_observations[a].begin(), dp.agent_observations[a].end(), obs[a]);
            if (it == dp.agent_observations[a].end())
                throw DecExportError("unknown observation '" + obs[a] + "'");
            dp.obs_of_state[s][a] = static_cast<uint32_t>(it - dp.agent_observations[a].begin());
        }
    }
    return dp;
}

DecProblem load_dpomdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DecExportError("cannot open '" + path + "'");
    return parse_dpomdp(in);
}

}  // namespace hypersynth
