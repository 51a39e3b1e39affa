#pragma once

// Model configuration files. Schema (JSON):
//   {
//     "states": [ { "label": "...", "drift": r, "sigma": s, "jump_rate": l,
//                   "jump_dist": { "type": "exp"|"erlang"|"hyperexp"|"zero"|"det", ... } }, ... ],
//     "Q": [ row-major d*d array ],
//     "transition_jumps": [ { "from": label, "to": label, "dist": {...} }, ... ],
//     "capacity": K
//   }
// Serialization is canonical: fixed key order, states in file order, sparse
// transition jumps sorted by (from, to).

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mapq/model.hpp"
#include "mapq/report.hpp"

namespace mapq {

using ordered_json = nlohmann::ordered_json;

inline ordered_json jump_to_json(const JumpDistribution& b) {
    ordered_json j;
    switch (b.kind()) {
        case JumpDistribution::Kind::Zero: j["type"] = "zero"; break;
        case JumpDistribution::Kind::Exponential:
            j["type"] = "exp";
            j["rate"] = b.rates()[0];
            break;
        case JumpDistribution::Kind::Erlang:
            j["type"] = "erlang";
            j["shape"] = b.shape();
            j["rate"] = b.rates()[0];
            break;
        case JumpDistribution::Kind::HyperExponential:
            j["type"] = "hyperexp";
            j["weights"] = b.weights();
            j["rates"] = b.rates();
            break;
        case JumpDistribution::Kind::Deterministic:
            j["type"] = "det";
            j["value"] = b.rates()[0];
            break;
    }
    return j;
}

inline JumpDistribution jump_from_json(const ordered_json& j) {
    if (!j.is_object() || !j.contains("type")) throw InputError("jump_dist must be an object with a type");
    std::string type = j.at("type").get<std::string>();
    if (type == "zero") return JumpDistribution::zero();
    if (type == "exp") return JumpDistribution::exponential(j.at("rate").get<double>());
    if (type == "erlang")
        return JumpDistribution::erlang(j.at("shape").get<int>(), j.at("rate").get<double>());
    if (type == "hyperexp")
        return JumpDistribution::hyperexponential(j.at("weights").get<std::vector<double>>(),
                                                  j.at("rates").get<std::vector<double>>());
    if (type == "det") return JumpDistribution::deterministic(j.at("value").get<double>());
    throw InputError("unknown jump_dist type '" + type + "'");
}

inline ModelSpec model_from_json(const ordered_json& j) {
    ModelSpec m;
    if (!j.contains("states") || !j.at("states").is_array())
        throw InputError("model file: missing 'states' array");
    const auto& states = j.at("states");
    m.d = static_cast<int>(states.size());
    m.labels.resize(m.d);
    m.components.resize(m.d);
    for (int i = 0; i < m.d; ++i) {
        const auto& s = states.at(i);
        m.labels[i] = s.contains("label") ? s.at("label").get<std::string>() : std::to_string(i + 1);
        LevyComponent c;
        c.drift = s.value("drift", 0.0);
        c.sigma = s.value("sigma", 0.0);
        c.jump_rate = s.value("jump_rate", 0.0);
        c.jumps = s.contains("jump_dist") ? jump_from_json(s.at("jump_dist")) : JumpDistribution::zero();
        m.components[i] = c;
    }
    if (!j.contains("Q")) throw InputError("model file: missing 'Q'");
    auto q = j.at("Q").get<std::vector<double>>();
    if (static_cast<int>(q.size()) != m.d * m.d)
        throw InputError("model file: Q must have d*d entries");
    m.Q.resize(m.d, m.d);
    for (int i = 0; i < m.d; ++i)
        for (int k = 0; k < m.d; ++k) m.Q(i, k) = q[i * m.d + k];
    m.transition_jumps.assign(m.d, std::vector<JumpDistribution>(m.d));
    if (j.contains("transition_jumps")) {
        auto find_state = [&](const ordered_json& v) {
            if (v.is_number_integer()) {
                int idx = v.get<int>();
                if (idx < 0 || idx >= m.d) throw InputError("transition jump state index out of range");
                return idx;
            }
            std::string lbl = v.get<std::string>();
            for (int i = 0; i < m.d; ++i)
                if (m.labels[i] == lbl) return i;
            throw InputError("transition jump references unknown state '" + lbl + "'");
        };
        for (const auto& tj : j.at("transition_jumps")) {
            int from = find_state(tj.at("from")), to = find_state(tj.at("to"));
            m.transition_jumps[from][to] = jump_from_json(tj.at("dist"));
        }
    }
    if (!j.contains("capacity")) throw InputError("model file: missing 'capacity'");
    m.capacity = j.at("capacity").get<double>();
    return m;
}

inline ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw InputError("model file parse error: " + std::string(e.what()));
    }
    return model_from_json(j);
}

inline ordered_json model_to_json(const ModelSpec& m) {
    ordered_json j;
    j["states"] = ordered_json::array();
    for (int i = 0; i < m.d; ++i) {
        ordered_json s;
        s["label"] = m.labels.size() == static_cast<std::size_t>(m.d) ? m.labels[i]
                                                                      : std::to_string(i + 1);
        s["drift"] = m.components[i].drift;
        s["sigma"] = m.components[i].sigma;
        s["jump_rate"] = m.components[i].jump_rate;
        s["jump_dist"] = jump_to_json(m.components[i].jumps);
        j["states"].push_back(s);
    }
    std::vector<double> q(m.d * m.d);
    for (int i = 0; i < m.d; ++i)
        for (int k = 0; k < m.d; ++k) q[i * m.d + k] = m.Q(i, k);
    j["Q"] = q;
    j["transition_jumps"] = ordered_json::array();
    for (int i = 0; i < m.d; ++i)
        for (int k = 0; k < m.d; ++k)
            if (!m.transition_jumps[i][k].is_zero()) {
                ordered_json tj;
                tj["from"] = m.labels[i];
                tj["to"] = m.labels[k];
                tj["dist"] = jump_to_json(m.transition_jumps[i][k]);
                j["transition_jumps"].push_back(tj);
            }
    j["capacity"] = m.capacity;
    return j;
}

inline std::string canonical_model_string(const ModelSpec& m) { return model_to_json(m).dump(2) + "\n"; }

// --- CSV emission -----------------------------------------------------------

inline std::string csv_header() { return "t,x,state,metric,value,err"; }

inline std::string to_csv(const TransientReport& report) {
    std::ostringstream os;
    os << csv_header() << "\n";
    os.precision(12);
    for (const auto& r : report.rows)
        os << r.t << "," << r.x << "," << r.state << "," << r.metric << "," << r.value << ","
           << r.err << "\n";
    return os.str();
}

struct CsvRow {
    double t;
    double x;
    std::string state;
    std::string metric;
    double value;
    double err;
};

inline std::vector<CsvRow> parse_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("t,", 0) == 0) continue;  // header
        }
        std::istringstream ls(line);
        std::string f[6];
        for (int i = 0; i < 6; ++i)
            if (!std::getline(ls, f[i], ',') && i < 5)
                throw InputError("CSV parse error at line " + std::to_string(lineno));
        CsvRow r;
        try {
            r.t = std::stod(f[0]);
            r.x = std::stod(f[1]);
            r.state = f[2];
            r.metric = f[3];
            r.value = std::stod(f[4]);
            r.err = f[5].empty() ? 0.0 : std::stod(f[5]);
        } catch (const std::exception&) {
            throw InputError("CSV parse error at line " + std::to_string(lineno));
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace mapq
