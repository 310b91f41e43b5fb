#include "scl/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace scl {

using nlohmann::json;

std::string substitute_constants(const std::string& text,
                                 const std::map<std::string, double>& constants) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const char ch = text[i];
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            const std::string ident = text.substr(i, j - i);
            auto it = constants.find(ident);
            if (it != constants.end()) {
                out += '(' + format17(it->second) + ')';
            } else {
                out += ident;
            }
            i = j;
        } else {
            out += ch;
            ++i;
        }
    }
    return out;
}

namespace {

void require_keys(const json& j, const char* section,
                  std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw ConfigError(std::string("unknown key \"") + it.key() + "\" in section " +
                              section);
    }
}

double num(const json& j, const char* section, const char* key) {
    if (!j.contains(key))
        throw ConfigError(std::string("missing required key \"") + key + "\" in section " +
                          section);
    if (!j[key].is_number())
        throw ConfigError(std::string("key \"") + key + "\" in section " + section +
                          " must be a number");
    return j[key].get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("key \"") + key + "\" must be a number");
    return j[key].get<double>();
}

std::string str(const json& j, const char* section, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw ConfigError(std::string("missing or non-string key \"") + key +
                          "\" in section " + section);
    return j[key].get<std::string>();
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config is not valid JSON: ") + err.what());
    }
    require_keys(j, "top level",
                 {"constants", "problem", "grid", "solver", "mc", "output",
                  "general_terminal"});

    RunConfig cfg;
    if (j.contains("constants")) {
        if (!j["constants"].is_object())
            throw ConfigError("\"constants\" must be an object of name -> number");
        for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it) {
            if (!it.value().is_number())
                throw ConfigError("constant \"" + it.key() + "\" must be a number");
            cfg.constants[it.key()] = it.value().get<double>();
        }
    }

    if (!j.contains("problem")) throw ConfigError("missing \"problem\" section");
    const json& p = j["problem"];
    require_keys(p, "problem",
                 {"c", "d", "T", "band", "sigma", "f1", "f2", "h", "g", "sigma_floor",
                  "bound_M"});
    cfg.c = num(p, "problem", "c");
    cfg.d = num(p, "problem", "d");
    cfg.horizon = num(p, "problem", "T");
    if (!p.contains("band") || !p["band"].is_array() || p["band"].size() != 2)
        throw ConfigError("\"problem.band\" must be [lo, hi]");
    cfg.band_lo = p["band"][0].get<double>();
    cfg.band_hi = p["band"][1].get<double>();
    cfg.sigma_text = str(p, "problem", "sigma");
    cfg.f1_text = str(p, "problem", "f1");
    cfg.f2_text = str(p, "problem", "f2");
    cfg.h_text = str(p, "problem", "h");
    cfg.g_text = str(p, "problem", "g");
    cfg.sigma_floor = num_or(p, "sigma_floor", 1e-8);
    cfg.bound = num(p, "problem", "bound_M");

    if (!j.contains("grid")) throw ConfigError("missing \"grid\" section");
    const json& g = j["grid"];
    require_keys(g, "grid", {"nt", "ny"});
    cfg.nt = static_cast<int>(num(g, "grid", "nt"));
    cfg.ny = static_cast<int>(num(g, "grid", "ny"));
    if (cfg.nt <= 0 || cfg.ny <= 0) throw ConfigError("grid sizes must be positive");

    if (j.contains("solver")) {
        const json& s = j["solver"];
        require_keys(s, "solver",
                     {"theta", "omega", "sweep_tol", "max_sweeps", "residual_tol", "kink_tol",
                      "root_tol", "hjb_tol"});
        cfg.solver.theta = num_or(s, "theta", cfg.solver.theta);
        cfg.solver.omega = num_or(s, "omega", cfg.solver.omega);
        cfg.solver.sweep_tol = num_or(s, "sweep_tol", cfg.solver.sweep_tol);
        cfg.solver.max_sweeps = static_cast<int>(num_or(s, "max_sweeps", cfg.solver.max_sweeps));
        cfg.solver.residual_tol = num_or(s, "residual_tol", cfg.solver.residual_tol);
        cfg.solver.kink_tol = num_or(s, "kink_tol", cfg.solver.kink_tol);
        cfg.root_tol = num_or(s, "root_tol", cfg.root_tol);
        cfg.hjb_tol = num_or(s, "hjb_tol", cfg.hjb_tol);
    }

    if (j.contains("mc")) {
        const json& m = j["mc"];
        require_keys(m, "mc",
                     {"n_paths", "dt", "seed", "start", "perturbation", "max_ci_halfwidth"});
        cfg.mc.n_paths = static_cast<int>(num_or(m, "n_paths", cfg.mc.n_paths));
        cfg.mc.dt = num_or(m, "dt", cfg.mc.dt);
        cfg.mc.seed = static_cast<uint64_t>(num_or(m, "seed", static_cast<double>(cfg.mc.seed)));
        if (m.contains("start")) {
            if (!m["start"].is_array() || m["start"].size() != 2)
                throw ConfigError("\"mc.start\" must be [s, x]");
            cfg.mc.s = m["start"][0].get<double>();
            cfg.mc.x = m["start"][1].get<double>();
        }
        cfg.mc.perturbation = num_or(m, "perturbation", cfg.mc.perturbation);
        cfg.mc.max_ci_halfwidth = num_or(m, "max_ci_halfwidth", cfg.mc.max_ci_halfwidth);
        if (cfg.mc.n_paths <= 0) throw ConfigError("mc.n_paths must be positive");
    }

    if (j.contains("output")) {
        const json& o = j["output"];
        require_keys(o, "output", {"dir"});
        if (o.contains("dir")) cfg.out_dir = str(o, "output", "dir");
    }

    if (j.contains("general_terminal")) {
        if (!j["general_terminal"].is_boolean())
            throw ConfigError("\"general_terminal\" must be a boolean");
        cfg.general_terminal = j["general_terminal"].get<bool>();
    }
    cfg.mc.general_terminal = cfg.general_terminal;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

ProblemSpec RunConfig::build_problem() const {
    auto parse = [&](const std::string& text, const char* name) {
        try {
            return Expr::parse(substitute_constants(text, constants));
        } catch (const ExprParseError& err) {
            throw ConfigError(std::string("in expression for ") + name + ": " + err.what());
        }
    };
    return make_problem(c, d, horizon, band_lo, band_hi, parse(sigma_text, "sigma"),
                        parse(f1_text, "f1"), parse(f2_text, "f2"), parse(h_text, "h"),
                        parse(g_text, "g"), sigma_floor, bound);
}

Grid RunConfig::build_grid() const { return Grid(horizon, band_lo, band_hi, nt, ny); }

std::string RunConfig::dump() const {
    json j;
    if (!constants.empty()) {
        json c_obj = json::object();
        for (const auto& [k, v] : constants) c_obj[k] = v;
        j["constants"] = c_obj;
    }
    j["problem"] = {{"c", c},
                    {"d", d},
                    {"T", horizon},
                    {"band", {band_lo, band_hi}},
                    {"sigma", sigma_text},
                    {"f1", f1_text},
                    {"f2", f2_text},
                    {"h", h_text},
                    {"g", g_text},
                    {"sigma_floor", sigma_floor},
                    {"bound_M", bound}};
    j["grid"] = {{"nt", nt}, {"ny", ny}};
    j["solver"] = {{"theta", solver.theta},
                   {"omega", solver.omega},
                   {"sweep_tol", solver.sweep_tol},
                   {"max_sweeps", solver.max_sweeps},
                   {"residual_tol", solver.residual_tol},
                   {"kink_tol", solver.kink_tol},
                   {"root_tol", root_tol},
                   {"hjb_tol", hjb_tol}};
    j["mc"] = {{"n_paths", mc.n_paths},
               {"dt", mc.dt},
               {"seed", mc.seed},
               {"start", {mc.s, mc.x}},
               {"perturbation", mc.perturbation},
               {"max_ci_halfwidth", mc.max_ci_halfwidth}};
    j["output"] = {{"dir", out_dir}};
    j["general_terminal"] = general_terminal;
    return j.dump(2) + "\n";
}

bool RunConfig::operator==(const RunConfig& other) const { return dump() == other.dump(); }

} // namespace scl
