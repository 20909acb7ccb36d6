#include "phonoloc/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "phonoloc/errors.hpp"

namespace phonoloc::cli {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot read config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Json from_toml(const toml::node& node, const std::string& path, RawConfig& raw) {
    const auto line = static_cast<long>(node.source().begin.line);
    if (line > 0 && !path.empty()) raw.lines.emplace(path, line);
    if (const auto* t = node.as_table()) {
        Json out = Json::object();
        for (const auto& [key, child] : *t) {
            const std::string k(key.str());
            out[k] = from_toml(child, path.empty() ? k : path + "." + k, raw);
        }
        return out;
    }
    if (const auto* a = node.as_array()) {
        Json out = Json::array();
        for (std::size_t i = 0; i < a->size(); ++i) out.push_back(from_toml((*a)[i], path + "[" + std::to_string(i) + "]", raw));
        return out;
    }
    if (auto v = node.value_exact<std::string>()) return *v;
    if (auto v = node.value_exact<int64_t>()) return *v;
    if (auto v = node.value_exact<double>()) return *v;
    if (auto v = node.value_exact<bool>()) return *v;
    std::ostringstream msg;
    msg << raw.origin << ":" << line << ": '" << path << "' has an unsupported type (dates and times are not accepted)";
    throw ConfigError(msg.str());
}

// Key-tracking view of one config table: every lookup marks the key as used,
// and finish() rejects whatever was not looked up.
class Section {
public:
    Section(const RawConfig& raw, std::string name) : raw_(raw), name_(std::move(name)) {
        if (name_.empty()) {
            node_ = &raw.doc;
        } else if (raw.doc.contains(name_)) {
            node_ = &raw.doc.at(name_);
            if (!node_->is_object()) fail("", "must be a table");
        }
    }

    bool present() const { return node_ != nullptr; }

    std::string where(const std::string& key) const {
        const std::string path = name_.empty() ? key : key.empty() ? name_ : name_ + "." + key;
        std::ostringstream out;
        out << raw_.origin;
        if (auto it = raw_.lines.find(path); it != raw_.lines.end()) {
            out << ":" << it->second;
        } else if (auto sec = raw_.lines.find(name_); sec != raw_.lines.end()) {
            out << ":" << sec->second;
        }
        out << ": '" << path << "'";
        return out.str();
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(where(key) + " " + what);
    }

    const Json* get(const std::string& key) {
        used_.insert(key);
        if (!node_ || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

    std::optional<double> opt_number(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) fail(key, "must be a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }
    double number(const std::string& key, double fallback) { return opt_number(key).value_or(fallback); }
    double required_number(const std::string& key) {
        auto v = opt_number(key);
        if (!v) fail(key, "is required but missing");
        return *v;
    }

    std::optional<std::size_t> opt_count(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        return as_count(key, *v);
    }
    std::size_t count(const std::string& key, std::size_t fallback) { return opt_count(key).value_or(fallback); }

    std::optional<std::string> opt_text(const std::string& key) {
        const Json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(key, "must be a string");
        return v->get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) fail(key, "must be true or false");
        return v->get<bool>();
    }

    // A scalar is accepted wherever a list is.
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const Json* v = get(key);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& x : v->is_array() ? *v : Json::array({*v})) {
            if (!x.is_number() || !std::isfinite(x.get<double>())) fail(key, "must hold finite numbers");
            out.push_back(x.get<double>());
        }
        if (out.empty()) fail(key, "must not be empty");
        return out;
    }
    std::vector<std::size_t> counts(const std::string& key) {
        const Json* v = get(key);
        if (!v) return {};
        std::vector<std::size_t> out;
        for (const auto& x : v->is_array() ? *v : Json::array({*v})) out.push_back(as_count(key, x));
        return out;
    }
    std::vector<std::string> texts(const std::string& key) {
        const Json* v = get(key);
        if (!v) return {};
        std::vector<std::string> out;
        for (const auto& x : v->is_array() ? *v : Json::array({*v})) {
            if (!x.is_string()) fail(key, "must hold strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (used_.count(key)) continue;
            if (name_.empty() && value.is_object()) continue;  // sections are checked on their own
            fail(key, "is not a recognized key");
        }
    }

private:
    std::size_t as_count(const std::string& key, const Json& v) const {
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer()) {
            if (v.get<long long>() < 0) fail(key, "must not be negative");
            return static_cast<std::size_t>(v.get<long long>());
        }
        fail(key, "must be a non-negative integer");
    }

    const RawConfig& raw_;
    std::string name_;
    const Json* node_ = nullptr;
    std::set<std::string> used_;
};

const std::set<std::string> kSections{"chain", "disorder", "sampling", "dynamics", "fit", "spectrum",
                                      "com",   "ldos",     "manybody", "laser",    "units"};

const std::set<std::string> kModels{"product", "dimer", "clean", "explicit"};

std::string solver_name(manybody::Solver s) {
    switch (s) {
        case manybody::Solver::dense: return "dense";
        case manybody::Solver::lanczos: return "lanczos";
        default: return "auto";
    }
}

}  // namespace

RawConfig parse_toml(const std::string& text, const std::string& origin) {
    RawConfig raw;
    raw.origin = origin;
    try {
        const auto table = toml::parse(text, origin);
        raw.doc = from_toml(table, "", raw);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << origin << ":" << e.source().begin.line << ": " << e.description();
        throw ConfigError(msg.str());
    }
    return raw;
}

RawConfig parse_json(const std::string& text, const std::string& origin) {
    RawConfig raw;
    raw.origin = origin;
    try {
        raw.doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!raw.doc.is_object()) throw ConfigError(origin + ": top level must be an object");
    // A run manifest carries its resolved config under "config".
    if (raw.doc.contains("manifest_version") && raw.doc.contains("config")) {
        Json inner = raw.doc.at("config");
        raw.doc = std::move(inner);
    }
    return raw;
}

RawConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    RawConfig raw = path.extension() == ".json" ? parse_json(text, path.string()) : parse_toml(text, path.string());
    raw.base_dir = path.parent_path();
    return raw;
}

RunConfig resolve(const RawConfig& raw, const std::optional<std::string>& experiment) {
    RunConfig cfg;
    Section root(raw, "");
    for (const auto& [key, value] : raw.doc.items()) {
        if (value.is_object() && !kSections.count(key)) root.fail(key, "is not a recognized section");
    }

    const auto declared = root.opt_text("experiment");
    if (experiment && declared && *experiment != *declared) {
        root.fail("experiment", "is '" + *declared + "' but the command asked for '" + *experiment + "'");
    }
    if (!experiment && !declared) root.fail("experiment", "is required but missing");
    cfg.experiment = experiment ? *experiment : *declared;
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), cfg.experiment) == kinds.end()) {
        root.fail("experiment", "must be one of modes, dynamics, localization, spectrum, com-scaling, ldos, manybody");
    }
    if (auto out = root.opt_text("out")) cfg.out = *out;
    root.finish();

    // chain
    Section chain(raw, "chain");
    const bool sweep = cfg.experiment == "com-scaling";
    if (auto n = chain.opt_count("n_ions")) {
        if (*n < 1) chain.fail("n_ions", "must be at least 1");
        cfg.chain.n_ions = *n;
    } else if (!sweep) {
        chain.fail("n_ions", "is required but missing");
    }
    cfg.chain.beta = chain.number("beta", 0.05);
    cfg.chain.omega_t = chain.number("omega_t", 1.0);
    cfg.hopping_range = chain.count("hopping_range", 0);
    try {
        for (auto& w : cfg.chain.validate()) cfg.warnings.push_back(w);
    } catch (const InvalidArgument& e) {
        chain.fail(cfg.chain.beta <= 0.0 ? "beta" : cfg.chain.omega_t <= 0.0 ? "omega_t" : "n_ions", e.what());
    }
    if (!(cfg.chain.omega_t > 0.0)) chain.fail("omega_t", "must be positive");
    chain.finish();

    // disorder
    Section dis(raw, "disorder");
    cfg.disorder.model = dis.opt_text("model").value_or("product");
    if (!kModels.count(cfg.disorder.model)) dis.fail("model", "must be one of product, dimer, clean, explicit");
    cfg.disorder.p = dis.number("p", 0.5);
    if (cfg.disorder.p < 0.0 || cfg.disorder.p > 1.0) dis.fail("p", "must lie in [0, 1]");
    cfg.disorder.value = static_cast<int>(dis.count("value", 0));
    if (cfg.disorder.value > 1) dis.fail("value", "must be 0 or 1");
    if (auto file = dis.opt_text("file")) {
        std::filesystem::path f(*file);
        cfg.disorder.file = f.is_relative() && !raw.base_dir.empty() ? raw.base_dir / f : f;
    }
    if (cfg.disorder.model == "explicit") {
        if (cfg.disorder.file.empty()) dis.fail("file", "is required for the explicit model");
        try {
            const auto model = disorder::load_explicit(cfg.disorder.file);
            if (!sweep && model.n_sites() != cfg.chain.n_ions) dis.fail("file", "configurations do not match chain.n_ions");
        } catch (const phonoloc::Error& e) {
            dis.fail("file", std::string("is invalid: ") + e.what());
        }
    }
    cfg.disorder.U_over_t = dis.numbers("U_over_t", {0.0});
    const bool multi_u = cfg.experiment == "spectrum" || sweep;
    if (!multi_u && cfg.disorder.U_over_t.size() != 1) dis.fail("U_over_t", "takes a single value for " + cfg.experiment);
    if (sweep && cfg.disorder.model == "explicit") dis.fail("model", "explicit configurations cannot be swept over chain sizes");
    dis.finish();

    // sampling
    Section samp(raw, "sampling");
    cfg.sampling.n_samples = samp.count("samples", 200);
    if (cfg.sampling.n_samples < 1) samp.fail("samples", "must be at least 1");
    cfg.sampling.seed = samp.count("seed", 0);
    cfg.sampling.enumeration_cap = samp.count("enumeration_cap", 1024);
    samp.finish();

    // dynamics
    Section dyn(raw, "dynamics");
    cfg.dynamics.t_final = dyn.opt_number("t_final");
    if (cfg.dynamics.t_final && *cfg.dynamics.t_final < 0.0) dyn.fail("t_final", "must not be negative");
    cfg.dynamics.times = dyn.numbers("times", {});
    for (double t : cfg.dynamics.times) {
        if (t < 0.0) dyn.fail("times", "must not be negative");
    }
    cfg.dynamics.source = dyn.opt_count("source");
    if (cfg.dynamics.source && *cfg.dynamics.source >= cfg.chain.n_ions) dyn.fail("source", "is outside the chain");
    dyn.finish();

    // fit
    Section fit(raw, "fit");
    const auto dmin = fit.opt_count("min_distance");
    const auto dmax = fit.opt_count("max_distance");
    if (dmin || dmax) {
        cfg.fit.window = dynamics::FitWindow{dmin.value_or(1), dmax.value_or(cfg.chain.n_ions)};
        if (cfg.fit.window->max_distance < cfg.fit.window->min_distance) fit.fail("max_distance", "is below min_distance");
    }
    cfg.fit.floor_fraction = fit.number("floor", 1e-6);
    cfg.fit.ceiling_fraction = fit.number("ceiling", 1.0);
    if (!(cfg.fit.floor_fraction >= 0.0 && cfg.fit.floor_fraction < cfg.fit.ceiling_fraction)) {
        fit.fail("floor", "must be non-negative and below ceiling");
    }
    cfg.fit.min_points = fit.count("min_points", 6);
    fit.finish();

    // spectrum
    Section spec(raw, "spectrum");
    const auto side = spec.opt_text("sideband").value_or("blue");
    if (side != "blue" && side != "red") spec.fail("sideband", "must be 'blue' or 'red'");
    cfg.spectrum.sideband = side == "blue" ? spectroscopy::Sideband::blue : spectroscopy::Sideband::red;
    cfg.spectrum.nbar = spec.number("nbar", spectroscopy::kDefaultNbar);
    if (cfg.spectrum.nbar < 0.0) spec.fail("nbar", "must not be negative");
    const auto kernel = spec.opt_text("kernel").value_or("binned");
    if (kernel != "binned" && kernel != "lorentzian") spec.fail("kernel", "must be 'binned' or 'lorentzian'");
    cfg.spectrum.kernel = kernel == "binned" ? spectroscopy::Kernel::binned : spectroscopy::Kernel::lorentzian;
    cfg.spectrum.gamma_over_t = spec.number("gamma_over_t", 0.0);
    if (cfg.spectrum.gamma_over_t < 0.0) spec.fail("gamma_over_t", "must not be negative");
    cfg.spectrum.bins = spec.count("bins", 1000);
    if (cfg.spectrum.bins < 1) spec.fail("bins", "must be at least 1");
    cfg.spectrum.lo = spec.opt_number("lo");
    cfg.spectrum.hi = spec.opt_number("hi");
    if (cfg.spectrum.lo.has_value() != cfg.spectrum.hi.has_value()) spec.fail(cfg.spectrum.lo ? "hi" : "lo", "must be given together with its partner");
    if (cfg.spectrum.lo && !(*cfg.spectrum.hi > *cfg.spectrum.lo)) spec.fail("hi", "must exceed lo");
    spec.finish();

    // com
    Section com(raw, "com");
    cfg.com.n_values = com.counts("n_values");
    for (auto n : cfg.com.n_values) {
        if (n < 1) com.fail("n_values", "entries must be at least 1");
    }
    if (sweep && cfg.com.n_values.empty()) com.fail("n_values", "is required but missing");
    cfg.com.window_over_t = com.opt_number("window_over_t");
    if (cfg.com.window_over_t && !(*cfg.com.window_over_t > 0.0)) com.fail("window_over_t", "must be positive");
    cfg.com.analytic = com.flag("analytic", true);
    com.finish();

    // ldos
    Section ldos(raw, "ldos");
    cfg.ldos.site = ldos.opt_count("site");
    if (cfg.ldos.site && *cfg.ldos.site >= cfg.chain.n_ions) ldos.fail("site", "is outside the chain");
    cfg.ldos.models = ldos.texts("models");
    for (const auto& m : cfg.ldos.models) {
        if (m != "product" && m != "dimer") ldos.fail("models", "entries must be 'product' or 'dimer'");
    }
    cfg.ldos.pr_sizes = ldos.counts("pr_sizes");
    for (auto n : cfg.ldos.pr_sizes) {
        if (n < 1) ldos.fail("pr_sizes", "entries must be at least 1");
    }
    cfg.ldos.pr_fraction = ldos.number("pr_fraction", 0.1);
    if (!(cfg.ldos.pr_fraction > 0.0 && cfg.ldos.pr_fraction <= 1.0)) ldos.fail("pr_fraction", "must lie in (0, 1]");
    ldos.finish();

    // manybody
    Section mb(raw, "manybody");
    cfg.manybody.n_bosons = mb.count("n_bosons", 0);
    cfg.manybody.U_int_over_t = mb.number("U_int_over_t", 10.0);
    cfg.manybody.max_occ = mb.opt_count("max_occ");
    if (cfg.manybody.max_occ && *cfg.manybody.max_occ < 1) mb.fail("max_occ", "must be at least 1");
    const auto solver = mb.opt_text("solver").value_or("auto");
    if (solver == "auto") {
        cfg.manybody.solver = manybody::Solver::automatic;
    } else if (solver == "dense") {
        cfg.manybody.solver = manybody::Solver::dense;
    } else if (solver == "lanczos") {
        cfg.manybody.solver = manybody::Solver::lanczos;
    } else {
        mb.fail("solver", "must be 'auto', 'dense' or 'lanczos'");
    }
    if (cfg.experiment == "manybody") {
        const std::size_t m = cfg.manybody.n_bosons ? cfg.manybody.n_bosons : cfg.chain.n_ions;
        const auto dim = manybody::FockBasis::count(cfg.chain.n_ions, m + 1, cfg.manybody.max_occ);
        if (dim > manybody::kDefaultBasisCap) {
            mb.fail("n_bosons", "gives a Fock space of dimension " + std::to_string(dim) + " in the M+1 sector, above the cap of " +
                                    std::to_string(manybody::kDefaultBasisCap));
        }
    }
    mb.finish();

    // laser
    Section laser(raw, "laser");
    if (laser.present()) {
        LaserSpec l;
        l.rabi = laser.required_number("rabi");
        l.lamb_dicke = laser.number("lamb_dicke", 0.1);
        l.detuning = laser.required_number("detuning");
        if (l.detuning == 0.0) laser.fail("detuning", "must be nonzero");
        if (l.rabi < 0.0) laser.fail("rabi", "must not be negative");
        cfg.laser = l;
    }
    laser.finish();

    Section units(raw, "units");
    cfg.omega_t_hz = units.opt_number("omega_t_hz");
    if (cfg.omega_t_hz && !(*cfg.omega_t_hz > 0.0)) units.fail("omega_t_hz", "must be positive");
    units.finish();

    return cfg;
}

Json to_json(const RunConfig& c) {
    Json j;
    j["experiment"] = c.experiment;
    j["out"] = c.out.string();
    j["chain"] = {{"n_ions", c.chain.n_ions}, {"beta", c.chain.beta}, {"omega_t", c.chain.omega_t},
                  {"hopping_range", c.hopping_range}};
    Json dis = {{"model", c.disorder.model}, {"p", c.disorder.p}, {"value", c.disorder.value}};
    if (!c.disorder.file.empty()) dis["file"] = std::filesystem::absolute(c.disorder.file).string();
    dis["U_over_t"] = c.disorder.U_over_t;
    j["disorder"] = dis;
    j["sampling"] = {{"samples", c.sampling.n_samples},
                     {"seed", c.sampling.seed},
                     {"enumeration_cap", c.sampling.enumeration_cap}};
    Json dyn = Json::object();
    if (c.dynamics.t_final) dyn["t_final"] = *c.dynamics.t_final;
    if (!c.dynamics.times.empty()) dyn["times"] = c.dynamics.times;
    if (c.dynamics.source) dyn["source"] = *c.dynamics.source;
    j["dynamics"] = dyn;
    Json fit = {{"floor", c.fit.floor_fraction}, {"ceiling", c.fit.ceiling_fraction}, {"min_points", c.fit.min_points}};
    if (c.fit.window) {
        fit["min_distance"] = c.fit.window->min_distance;
        fit["max_distance"] = c.fit.window->max_distance;
    }
    j["fit"] = fit;
    Json spec = {{"sideband", c.spectrum.sideband == spectroscopy::Sideband::blue ? "blue" : "red"},
                 {"nbar", c.spectrum.nbar},
                 {"kernel", c.spectrum.kernel == spectroscopy::Kernel::binned ? "binned" : "lorentzian"},
                 {"gamma_over_t", c.spectrum.gamma_over_t},
                 {"bins", c.spectrum.bins}};
    if (c.spectrum.lo) {
        spec["lo"] = *c.spectrum.lo;
        spec["hi"] = *c.spectrum.hi;
    }
    j["spectrum"] = spec;
    Json com = {{"n_values", c.com.n_values}, {"analytic", c.com.analytic}};
    if (c.com.window_over_t) com["window_over_t"] = *c.com.window_over_t;
    j["com"] = com;
    Json ldos = {{"models", c.ldos.models}, {"pr_sizes", c.ldos.pr_sizes}, {"pr_fraction", c.ldos.pr_fraction}};
    if (c.ldos.site) ldos["site"] = *c.ldos.site;
    j["ldos"] = ldos;
    Json mb = {{"n_bosons", c.manybody.n_bosons},
               {"U_int_over_t", c.manybody.U_int_over_t},
               {"solver", solver_name(c.manybody.solver)}};
    if (c.manybody.max_occ) mb["max_occ"] = *c.manybody.max_occ;
    j["manybody"] = mb;
    if (c.laser) {
        j["laser"] = {{"rabi", c.laser->rabi}, {"lamb_dicke", c.laser->lamb_dicke}, {"detuning", c.laser->detuning}};
    }
    if (c.omega_t_hz) j["units"] = {{"omega_t_hz", *c.omega_t_hz}};
    return j;
}

}  // namespace phonoloc::cli
