// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rcgdm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"world",
         {{"D", [](RunConfig& c, auto& k, auto& v) { c.world.D = to_int(k, v); }},
          {"d", [](RunConfig& c, auto& k, auto& v) { c.world.d = to_int(k, v); }},
          {"sigma",
           [](RunConfig& c, auto& k, auto& v) {
               c.sigma_diag.clear();
               if (v == "identity") return;
               for (const auto& item : split(v)) c.sigma_diag.push_back(to_double(k, item));
           }},
          {"offsupport_coeff", [](RunConfig& c, auto& k, auto& v) { c.world.offsupport_coeff = to_double(k, v); }},
          {"offsupport_sign",
           [](RunConfig& c, auto& k, auto& v) {
               if (v == "penalty")
                   c.world.offsupport_sign = OffSupportSign::penalty;
               else if (v == "bonus")
                   c.world.offsupport_sign = OffSupportSign::bonus;
               else
                   throw ConfigError("config: '" + k + "' must be penalty or bonus");
           }}}},
        {"data",
         {{"n1", [](RunConfig& c, auto& k, auto& v) { c.n1 = to_int(k, v); }},
          {"n2", [](RunConfig& c, auto& k, auto& v) { c.n2 = to_int(k, v); }},
          {"noise_sigma", [](RunConfig& c, auto& k, auto& v) { c.noise_sigma = to_double(k, v); }},
          {"nu",
           [](RunConfig& c, auto& k, auto& v) { c.nu = (v == "auto") ? 0.0 : to_double(k, v); }},
          {"lambda", [](RunConfig& c, auto& k, auto& v) { c.lambda = to_double(k, v); }}}},
        {"schedule",
         {{"T", [](RunConfig& c, auto& k, auto& v) { c.schedule.T = to_double(k, v); }},
          {"t0", [](RunConfig& c, auto& k, auto& v) { c.schedule.t0 = to_double(k, v); }},
          {"eta", [](RunConfig& c, auto& k, auto& v) { c.schedule.eta = to_double(k, v); }}}},
        {"score",
         {{"variant", [](RunConfig& c, auto&, auto& v) { c.variant = parse_head(v); }},
          {"hidden",
           [](RunConfig& c, auto& k, auto& v) {
               c.hidden.clear();
               for (const auto& item : split(v)) c.hidden.push_back(to_int(k, item));
           }}}},
        {"train",
         {{"batch", [](RunConfig& c, auto& k, auto& v) { c.train.batch = to_int(k, v); }},
          {"epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = static_cast<int>(to_int(k, v)); }},
          {"learning_rate", [](RunConfig& c, auto& k, auto& v) { c.train.learning_rate = to_double(k, v); }},
          {"beta1", [](RunConfig& c, auto& k, auto& v) { c.train.beta1 = to_double(k, v); }},
          {"beta2", [](RunConfig& c, auto& k, auto& v) { c.train.beta2 = to_double(k, v); }},
          {"epsilon", [](RunConfig& c, auto& k, auto& v) { c.train.epsilon = to_double(k, v); }},
          {"validation_rows", [](RunConfig& c, auto& k, auto& v) { c.train.validation_rows = to_int(k, v); }}}},
        {"sweep",
         {{"a",
           [](RunConfig& c, auto& k, auto& v) {
               c.a_grid.clear();
               for (const auto& item : split(v)) c.a_grid.push_back(to_double(k, item));
           }},
          {"seeds",
           [](RunConfig& c, auto& k, auto& v) {
               c.seeds.clear();
               for (const auto& item : split(v)) {
                   const long long s = to_int(k, item);
                   if (s < 0) throw ConfigError("config: seeds must be nonnegative");
                   c.seeds.push_back(static_cast<std::uint64_t>(s));
               }
           }},
          {"n_eval", [](RunConfig& c, auto& k, auto& v) { c.n_eval = to_int(k, v); }},
          {"n_ref", [](RunConfig& c, auto& k, auto& v) { c.n_ref = to_int(k, v); }},
          {"shift_rows", [](RunConfig& c, auto& k, auto& v) { c.shift_rows = to_int(k, v); }},
          {"shift_inner", [](RunConfig& c, auto& k, auto& v) { c.shift_inner = to_int(k, v); }},
          {"bins", [](RunConfig& c, auto& k, auto& v) { c.bins = static_cast<int>(to_int(k, v)); }},
          {"workers", [](RunConfig& c, auto& k, auto& v) { c.workers = static_cast<int>(to_int(k, v)); }}}},
        {"output",
         {{"dir", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
          {"csv", [](RunConfig& c, auto& k, auto& v) { c.csv = to_bool(k, v); }}}},
    };
    return table;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    return out.str();
}

}  // namespace

double RunConfig::resolved_nu() const {
    return nu > 0.0 ? nu : 1.0 / std::sqrt(static_cast<double>(world.D));
}

void RunConfig::validate() const {
    if (world.d < 1 || world.d > world.D) throw ConfigError("config: need 1 <= d <= D");
    if (!sigma_diag.empty()) {
        if (static_cast<Eigen::Index>(sigma_diag.size()) != world.d)
            throw ConfigError("config: sigma must list exactly d diagonal entries");
        for (double s : sigma_diag)
            if (!(s > 0.0 && s <= 1.0)) throw ConfigError("config: sigma entries must lie in (0, 1]");
    }
    if (world.offsupport_coeff < 0.0) throw ConfigError("config: offsupport_coeff must be >= 0");
    if (n1 < 1 || n2 < 1) throw ConfigError("config: n1 and n2 must be >= 1");
    if (!(noise_sigma >= 0.0 && noise_sigma < 1.0)) throw ConfigError("config: noise_sigma must lie in [0, 1)");
    if (nu < 0.0) throw ConfigError("config: nu must be > 0 (or auto)");
    if (!(lambda > 0.0)) throw ConfigError("config: lambda must be > 0");
    try {
        schedule.validate();
        train.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (variant == HeadKind::mlp && hidden.empty()) throw ConfigError("config: mlp variant needs hidden widths");
    for (auto w : hidden)
        if (w < 1) throw ConfigError("config: hidden widths must be >= 1");
    if (a_grid.empty()) throw ConfigError("config: sweep a-grid is empty");
    if (seeds.empty()) throw ConfigError("config: seed list is empty");
    if (n_eval < 1 || n_ref < 1 || shift_rows < 1 || shift_inner < 1)
        throw ConfigError("config: sweep sample counts must be >= 1");
    if (bins < 1) throw ConfigError("config: bins must be >= 1");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of a section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& keys = schema().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        try {
            it->second(config, section + "." + key, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (!config.sigma_diag.empty()) {
        const Vector diag = Eigen::Map<const Vector>(config.sigma_diag.data(),
                                                     static_cast<Eigen::Index>(config.sigma_diag.size()));
        config.world.Sigma = Matrix(diag.asDiagonal());
    }
    config.validate();
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_ini(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "[world]\n"
        << "D = " << c.world.D << "\n"
        << "d = " << c.world.d << "\n"
        << "sigma = " << (c.sigma_diag.empty() ? std::string("identity") : join(c.sigma_diag)) << "\n"
        << "offsupport_coeff = " << c.world.offsupport_coeff << "\n"
        << "offsupport_sign = " << (c.world.offsupport_sign == OffSupportSign::penalty ? "penalty" : "bonus")
        << "\n\n[data]\n"
        << "n1 = " << c.n1 << "\n"
        << "n2 = " << c.n2 << "\n"
        << "noise_sigma = " << c.noise_sigma << "\n"
        << "nu = " << c.resolved_nu() << "\n"
        << "lambda = " << c.lambda << "\n\n[schedule]\n"
        << "T = " << c.schedule.T << "\n"
        << "t0 = " << c.schedule.t0 << "\n"
        << "eta = " << c.schedule.eta << "\n\n[score]\n"
        << "variant = " << head_name(c.variant) << "\n"
        << "hidden = " << join(c.hidden) << "\n\n[train]\n"
        << "batch = " << c.train.batch << "\n"
        << "epochs = " << c.train.epochs << "\n"
        << "learning_rate = " << c.train.learning_rate << "\n"
        << "beta1 = " << c.train.beta1 << "\n"
        << "beta2 = " << c.train.beta2 << "\n"
        << "epsilon = " << c.train.epsilon << "\n"
        << "validation_rows = " << c.train.validation_rows << "\n\n[sweep]\n"
        << "a = " << join(c.a_grid) << "\n"
        << "seeds = " << join(c.seeds) << "\n"
        << "n_eval = " << c.n_eval << "\n"
        << "n_ref = " << c.n_ref << "\n"
        << "shift_rows = " << c.shift_rows << "\n"
        << "shift_inner = " << c.shift_inner << "\n"
        << "bins = " << c.bins << "\n"
        << "workers = " << c.workers << "\n\n[output]\n";
    if (!c.out_dir.empty()) out << "dir = " << c.out_dir << "\n";
    out << "csv = " << (c.csv ? "true" : "false") << "\n";
    return out.str();
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"world",
             {{"D", c.world.D},
              {"d", c.world.d},
              {"sigma", c.sigma_diag.empty() ? nlohmann::json("identity") : nlohmann::json(c.sigma_diag)},
              {"offsupport_coeff", c.world.offsupport_coeff},
              {"offsupport_sign", c.world.offsupport_sign == OffSupportSign::penalty ? "penalty" : "bonus"}}},
            {"data",
             {{"n1", c.n1}, {"n2", c.n2}, {"noise_sigma", c.noise_sigma}, {"nu", c.resolved_nu()}, {"lambda", c.lambda}}},
            {"schedule", {{"T", c.schedule.T}, {"t0", c.schedule.t0}, {"eta", c.schedule.eta}}},
            {"score", {{"variant", head_name(c.variant)}, {"hidden", c.hidden}}},
            {"train",
             {{"batch", c.train.batch},
              {"epochs", c.train.epochs},
              {"learning_rate", c.train.learning_rate},
              {"beta1", c.train.beta1},
              {"beta2", c.train.beta2},
              {"epsilon", c.train.epsilon},
              {"validation_rows", c.train.validation_rows}}},
            {"sweep",
             {{"a", c.a_grid},
              {"seeds", c.seeds},
              {"n_eval", c.n_eval},
              {"n_ref", c.n_ref},
              {"shift_rows", c.shift_rows},
              {"shift_inner", c.shift_inner},
              {"bins", c.bins},
              {"workers", c.workers}}},
            {"output", {{"csv", c.csv}}}};
}

std::filesystem::path resolve_out_dir(const RunConfig& config, const std::string& cli_out) {
    if (!cli_out.empty()) return cli_out;
    if (!config.out_dir.empty()) return config.out_dir;
    if (const char* env = std::getenv("RCGDM_OUT"); env != nullptr && *env != '\0') return env;
    return "runs";
}

}  // namespace rcgdm
