#include "mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hypersynth {

double Distribution::sum() const {
    double s = 0.0;
    for (const auto& e : support) s += e.prob;
    return s;
}

void Distribution::normalize_layout() {
    std::sort(support.begin(), support.end(),
              [](const TransitionEntry& a, const TransitionEntry& b) { return a.target < b.target; });
    std::vector<TransitionEntry> merged;
    for (const auto& e : support) {
        if (!merged.empty() && merged.back().target == e.target)
            merged.back().prob += e.prob;
        else
            merged.push_back(e);
    }
    support = std::move(merged);
}

bool Mdp::is_markov_chain() const {
    for (const auto& acts : enabled)
        if (acts.size() != 1) return false;
    return true;
}

int Mdp::enabled_index(StateId s, ActionId a) const {
    const auto& acts = enabled[s];
    auto it = std::lower_bound(acts.begin(), acts.end(), a);
    if (it == acts.end() || *it != a) return -1;
    return static_cast<int>(it - acts.begin());
}

ActionId Mdp::action_id(const std::string& name) const {
    for (size_t i = 0; i < action_names.size(); ++i)
        if (action_names[i] == name) return static_cast<ActionId>(i);
    return kNoAction;
}

uint32_t Mdp::ap_id(const std::string& name) const {
    for (size_t i = 0; i < ap_names.size(); ++i)
        if (ap_names[i] == name) return static_cast<uint32_t>(i);
    return kMaxAtomicPropositions;
}

std::vector<std::string> validate_mdp(const Mdp& m) {
    std::vector<std::string> report;
    auto fail = [&](const std::string& msg) { report.push_back(msg); };

    if (m.ap_names.size() > kMaxAtomicPropositions)
        fail("too many atomic propositions (limit 64)");
    if (m.num_states == 0) fail("model has no states");
    if (m.enabled.size() != m.num_states || m.rows.size() != m.num_states ||
        m.labels.size() != m.num_states) {
        fail("per-state arrays do not match the declared state count");
        return report;
    }

    for (StateId s = 0; s < m.num_states; ++s) {
        if (m.enabled[s].empty()) {
            fail("dead state " + std::to_string(s) + " (no enabled action)");
            continue;
        }
        if (!std::is_sorted(m.enabled[s].begin(), m.enabled[s].end()) ||
            std::adjacent_find(m.enabled[s].begin(), m.enabled[s].end()) != m.enabled[s].end())
            fail("enabled actions of state " + std::to_string(s) + " not sorted/distinct");
        if (m.rows[s].size() != m.enabled[s].size()) {
            fail("transition rows missing for state " + std::to_string(s));
            continue;
        }
        for (size_t k = 0; k < m.enabled[s].size(); ++k) {
            ActionId a = m.enabled[s][k];
            std::string where = "(s" + std::to_string(s) + "," +
                                (a < m.action_names.size() ? m.action_names[a] : "a" + std::to_string(a)) + ")";
            if (a >= m.action_names.size()) fail("unknown action id at " + where);
            const Distribution& d = m.rows[s][k];
            if (d.support.empty()) {
                fail("empty distribution at " + where);
                continue;
            }
            StateId prev = kNoState;
            for (const auto& e : d.support) {
                if (e.target >= m.num_states) fail("transition target out of range at " + where);
                if (prev != kNoState && e.target <= prev) fail("distribution entries not sorted/distinct at " + where);
                prev = e.target;
                if (!(e.prob > 0.0) || e.prob > 1.0 + kRowSumTolerance)
                    fail("probability outside (0,1] at " + where);
            }
            if (std::abs(d.sum() - 1.0) > kRowSumTolerance)
                fail("row-sum violation at " + where);
        }
        if (m.num_aps() < 64 && (m.labels[s] >> m.num_aps()) != 0)
            fail("state " + std::to_string(s) + " labeled with undeclared proposition");
    }

    if (m.rewards) {
        if (m.rewards->values.size() != m.num_states) {
            fail("reward structure does not cover all states");
        } else {
            for (StateId s = 0; s < m.num_states; ++s) {
                if (m.rewards->values[s].size() != m.enabled[s].size()) {
                    fail("reward row of state " + std::to_string(s) + " misaligned");
                    continue;
                }
                for (double r : m.rewards->values[s])
                    if (!(r >= 0.0) || !std::isfinite(r))
                        fail("negative or non-finite reward at state " + std::to_string(s));
            }
        }
    }
    return report;
}

Mdp induce_mc(const Mdp& m, const MemorylessPolicy& p) {
    Mdp mc;
    mc.action_names = m.action_names;
    mc.ap_names = m.ap_names;
    mc.num_states = m.num_states;
    mc.labels = m.labels;
    mc.enabled.resize(m.num_states);
    mc.rows.resize(m.num_states);
    if (m.rewards) {
        mc.rewards = RewardStructure{m.rewards->name, {}};
        mc.rewards->values.resize(m.num_states);
    }
    for (StateId s = 0; s < m.num_states; ++s) {
        if (!p.defined(s))
            throw ModelError("policy undefined on state " + std::to_string(s));
        ActionId a = p.choice[s];
        int k = m.enabled_index(s, a);
        if (k < 0)
            throw ModelError("policy picks disabled action at state " + std::to_string(s));
        mc.enabled[s] = {a};
        mc.rows[s] = {m.rows[s][static_cast<size_t>(k)]};
        if (m.rewards) mc.rewards->values[s] = {m.rewards->values[s][static_cast<size_t>(k)]};
    }
    return mc;
}

Mdp uniform_chain(const Mdp& m) {
    Mdp mc;
    mc.action_names = {"unif"};
    mc.ap_names = m.ap_names;
    mc.num_states = m.num_states;
    mc.labels = m.labels;
    mc.enabled.assign(m.num_states, {0});
    mc.rows.resize(m.num_states);
    if (m.rewards) {
        mc.rewards = RewardStructure{m.rewards->name, {}};
        mc.rewards->values.resize(m.num_states);
    }
    for (StateId s = 0; s < m.num_states; ++s) {
        const double w = 1.0 / static_cast<double>(m.rows[s].size());
        Distribution mix;
        double rew = 0.0;
        for (size_t k = 0; k < m.rows[s].size(); ++k) {
            for (const auto& e : m.rows[s][k].support)
                mix.support.push_back({e.target, e.prob * w});
            if (m.rewards) rew += w * m.rewards->values[s][k];
        }
        mix.normalize_layout();
        mc.rows[s] = {std::move(mix)};
        if (m.rewards) mc.rewards->values[s] = {rew};
    }
    return mc;
}

namespace {

double parse_probability(const std::string& tok, int line_no) {
    auto bad = [&] {
        throw ModelError("line " + std::to_string(line_no) + ": bad probability '" + tok + "'");
    };
    size_t slash = tok.find('/');
    try {
        if (slash != std::string::npos) {
            double num = std::stod(tok.substr(0, slash));
            double den = std::stod(tok.substr(slash + 1));
            if (den == 0.0) bad();
            return num / den;
        }
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) bad();
        return v;
    } catch (const std::logic_error&) {
        bad();
    }
    return 0.0;
}

StateId parse_state(const std::string& tok, uint32_t num_states, int line_no) {
    try {
        size_t pos = 0;
        unsigned long v = std::stoul(tok, &pos);
        if (pos != tok.size() || v >= num_states)
            throw ModelError("line " + std::to_string(line_no) + ": state '" + tok + "' out of range");
        return static_cast<StateId>(v);
    } catch (const std::logic_error&) {
        throw ModelError("line " + std::to_string(line_no) + ": bad state '" + tok + "'");
    }
}

}  // namespace

Mdp parse_model(std::istream& in) {
    Mdp m;
    bool have_states = false;
    // (state, action) -> distribution under construction
    std::map<std::pair<StateId, ActionId>, Distribution> trans;
    std::map<std::pair<StateId, ActionId>, double> rewards;
    bool has_rewards = false;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        if (tok[0] == "states") {
            if (tok.size() != 2) throw ModelError("line " + std::to_string(line_no) + ": expected 'states N'");
            m.num_states = static_cast<uint32_t>(std::stoul(tok[1]));
            have_states = true;
        } else if (tok[0] == "actions") {
            m.action_names.assign(tok.begin() + 1, tok.end());
        } else if (tok[0] == "ap") {
            m.ap_names.assign(tok.begin() + 1, tok.end());
            if (m.ap_names.size() > kMaxAtomicPropositions)
                throw ModelError("too many atomic propositions (limit 64)");
        } else if (tok[0] == "label") {
            if (!have_states) throw ModelError("label before 'states' header");
            if (tok.size() < 2) throw ModelError("line " + std::to_string(line_no) + ": expected 'label s ap...'");
            StateId s = parse_state(tok[1], m.num_states, line_no);
            if (m.labels.size() != m.num_states) m.labels.assign(m.num_states, 0);
            for (size_t i = 2; i < tok.size(); ++i) {
                uint32_t ap = m.ap_id(tok[i]);
                if (ap >= kMaxAtomicPropositions)
                    throw ModelError("line " + std::to_string(line_no) + ": undeclared proposition '" + tok[i] + "'");
                m.labels[s] |= uint64_t{1} << ap;
            }
        } else if (tok[0] == "reward") {
            if (!have_states) throw ModelError("reward before 'states' header");
            if (tok.size() != 4) throw ModelError("line " + std::to_string(line_no) + ": expected 'reward s a r'");
            StateId s = parse_state(tok[1], m.num_states, line_no);
            ActionId a = m.action_id(tok[2]);
            if (a == kNoAction) {
                try {
                    a = static_cast<ActionId>(std::stoul(tok[2]));
                } catch (const std::logic_error&) {
                    throw ModelError("line " + std::to_string(line_no) + ": unknown action '" + tok[2] + "'");
                }
            }
            rewards[{s, a}] = parse_probability(tok[3], line_no);
            has_rewards = true;
        } else {
            // transition: s a s' p
            if (!have_states) throw ModelError("transition before 'states' header");
            if (tok.size() != 4)
                throw ModelError("line " + std::to_string(line_no) + ": expected 's a s' p'");
            StateId s = parse_state(tok[0], m.num_states, line_no);
            ActionId a = m.action_id(tok[1]);
            if (a == kNoAction) {
                bool numeric = !tok[1].empty() &&
                               std::all_of(tok[1].begin(), tok[1].end(), [](char c) { return c >= '0' && c <= '9'; });
                if (numeric && std::stoul(tok[1]) < m.action_names.size())
                    a = static_cast<ActionId>(std::stoul(tok[1]));
                else
                    throw ModelError("line " + std::to_string(line_no) + ": unknown action '" + tok[1] + "'");
            }
            StateId t = parse_state(tok[2], m.num_states, line_no);
            double p = parse_probability(tok[3], line_no);
            trans[{s, a}].support.push_back({t, p});
        }
    }
    if (!have_states) throw ModelError("missing 'states' header");
    if (m.labels.size() != m.num_states) m.labels.assign(m.num_states, 0);

    m.enabled.resize(m.num_states);
    m.rows.resize(m.num_states);
    for (auto& [key, dist] : trans) {
        dist.normalize_layout();
        m.enabled[key.first].push_back(key.second);
        m.rows[key.first].push_back(std::move(dist));
    }
    if (has_rewards) {
        m.rewards = RewardStructure{};
        m.rewards->values.resize(m.num_states);
        for (StateId s = 0; s < m.num_states; ++s) {
            m.rewards->values[s].assign(m.enabled[s].size(), 0.0);
            for (size_t k = 0; k < m.enabled[s].size(); ++k) {
                auto it = rewards.find({s, m.enabled[s][k]});
                if (it != rewards.end()) m.rewards->values[s][k] = it->second;
            }
        }
    }
    return m;
}

Mdp parse_model_text(const std::string& text) {
    std::istringstream in(text);
    return parse_model(in);
}

Mdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    return parse_model(in);
}

void emit_model(const Mdp& m, std::ostream& out) {
    out << "states " << m.num_states << "\n";
    out << "actions";
    for (const auto& a : m.action_names) out << ' ' << a;
    out << "\n";
    if (!m.ap_names.empty()) {
        out << "ap";
        for (const auto& a : m.ap_names) out << ' ' << a;
        out << "\n";
    }
    out.precision(17);
    for (StateId s = 0; s < m.num_states; ++s)
        for (size_t k = 0; k < m.enabled[s].size(); ++k)
            for (const auto& e : m.rows[s][k].support)
                out << s << ' ' << m.action_names[m.enabled[s][k]] << ' ' << e.target << ' ' << e.prob << "\n";
    for (StateId s = 0; s < m.num_states; ++s) {
        if (m.labels[s] == 0) continue;
        out << "label " << s;
        for (uint32_t ap = 0; ap < m.num_aps(); ++ap)
            if (m.labels[s] & (uint64_t{1} << ap)) out << ' ' << m.ap_names[ap];
        out << "\n";
    }
    if (m.rewards)
        for (StateId s = 0; s < m.num_states; ++s)
            for (size_t k = 0; k < m.enabled[s].size(); ++k)
                if (m.rewards->values[s][k] != 0.0)
                    out << "reward " << s << ' ' << m.action_names[m.enabled[s][k]] << ' '
                        << m.rewards->values[s][k] << "\n";
}

std::string emit_model_text(const Mdp& m) {
    std::ostringstream out;
    emit_model(m, out);
    return out.str();
}

}  // namespace hypersynth
