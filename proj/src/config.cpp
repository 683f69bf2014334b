#include "qti/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "qti/errors.hpp"

namespace qti {

namespace pt = boost::property_tree;

std::string_view mode_name(Mode mode) {
    switch (mode) {
        case Mode::Forward: return "forward";
        case Mode::Invert: return "invert";
        case Mode::Stability: return "stability";
        case Mode::TwoLevel: return "twolevel";
    }
    return "forward";
}

Mode parse_mode(std::string_view text) {
    if (text == "forward") return Mode::Forward;
    if (text == "invert") return Mode::Invert;
    if (text == "stability") return Mode::Stability;
    if (text == "twolevel") return Mode::TwoLevel;
    throw ConfigError("mode: expected forward, invert, stability or twolevel, got '" + std::string(text) + "'");
}

Potential TruthSpec::potential() const {
    if (kind == Kind::Bump) return Potential(bump);
    return Potential(coeffs);
}

NoiseModel ExperimentConfig::noise() const {
    if (!noise_variances.empty()) return NoiseModel::diagonal(noise_variances);
    return NoiseModel::scalar(noise_scale, n_train());
}

namespace {

// Call-syntax values: name(arg, ...), bare names and numbers.
struct Node {
    std::string name;
    double number = 0.0;
    bool is_number = false;
    std::vector<Node> args;
};

class NodeParser {
public:
    NodeParser(std::string_view text, std::string field) : text_(text), field_(std::move(field)) {}

    std::vector<Node> list() {
        std::vector<Node> out;
        skip();
        if (pos_ == text_.size()) return out;
        out.push_back(item());
        skip();
        while (pos_ < text_.size() && text_[pos_] == ',') {
            ++pos_;
            out.push_back(item());
            skip();
        }
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(field_ + ": " + msg); }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    Node item() {
        skip();
        if (pos_ == text_.size()) fail("missing value");
        Node n;
        if (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
            n.name = std::string(text_.substr(start, pos_ - start));
            skip();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                ++pos_;
                skip();
                if (pos_ < text_.size() && text_[pos_] == ')') {
                    ++pos_;
                    return n;
                }
                n.args.push_back(item());
                skip();
                while (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    n.args.push_back(item());
                    skip();
                }
                if (pos_ >= text_.size() || text_[pos_] != ')') fail("missing ')'");
                ++pos_;
            }
            return n;
        }
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        if (*begin == '+') ++begin;
        auto [ptr, ec] = std::from_chars(begin, end, n.number);
        if (ec != std::errc() || ptr == begin) fail("expected a number at '" + std::string(text_.substr(pos_)) + "'");
        n.is_number = true;
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return n;
    }

    std::string_view text_;
    std::string field_;
    std::size_t pos_ = 0;
};

std::vector<double> numeric_args(const Node& n, std::size_t count, const std::string& field) {
    if (n.args.size() != count)
        throw ConfigError(field + ": " + n.name + " takes " + std::to_string(count) + " arguments");
    std::vector<double> out;
    for (const auto& a : n.args) {
        if (!a.is_number) throw ConfigError(field + ": arguments of " + n.name + " must be numbers");
        out.push_back(a.number);
    }
    return out;
}

Observable observable_from_node(const Node& n, const std::string& field) {
    if (n.name == "gaussian") {
        auto a = numeric_args(n, 2, field);
        return Observable::gaussian(a[0], a[1]);
    }
    if (n.name == "hermite") {
        auto a = numeric_args(n, 2, field);
        if (a[0] != std::floor(a[0]) || a[0] < 0) throw ConfigError(field + ": hermite order must be a non-negative integer");
        return Observable::hermite(static_cast<int>(a[0]), a[1]);
    }
    if (n.name == "quadratic") {
        auto a = numeric_args(n, 1, field);
        return Observable::quadratic_surrogate(a[0]);
    }
    throw ConfigError(field + ": unknown observable '" + n.name + "' (expected gaussian, hermite or quadratic)");
}

TwoLevelObservable two_level_from_node(const Node& n, const std::string& field) {
    Placement placement;
    if (n.name == "diagonal") placement = Placement::Diagonal;
    else if (n.name == "off_diagonal") placement = Placement::OffDiagonal;
    else throw ConfigError(field + ": expected diagonal(...) or off_diagonal(...), got '" + n.name + "'");
    if (n.args.size() != 1 || n.args[0].is_number) throw ConfigError(field + ": " + n.name + " takes one observable");
    return {placement, observable_from_node(n.args[0], field)};
}

PotentialCoeffs coeffs_from_node(const Node& n, const std::string& field) {
    if (n.name == "harmonic" && n.args.empty()) return PotentialCoeffs::harmonic(0);
    if (n.name != "coeffs") throw ConfigError(field + ": expected coeffs(...) or harmonic");
    if (n.args.empty()) throw ConfigError(field + ": coeffs needs at least one value");
    PotentialCoeffs V;
    for (const auto& a : n.args) {
        if (!a.is_number) throw ConfigError(field + ": coefficients must be numbers");
        V.v.push_back(a.number);
    }
    return V;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out;
}

std::string coeffs_text(const PotentialCoeffs& V) {
    std::vector<std::string> parts;
    for (double v : V.v) parts.push_back(num(v));
    return "coeffs(" + join(parts) + ")";
}

// Section layout and the keys each section accepts.
const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"mode", "seed"}},
        {"system", {"mass", "beta", "beads", "truth", "v00", "v11", "v01"}},
        {"prior", {"truncation", "scale", "exponent", "amplitude_scale"}},
        {"observables", {"train", "test"}},
        {"noise", {"scale", "variances"}},
        {"sampler", {"dt", "gamma", "n_steps", "n_burnin", "thin", "n_batches", "eta"}},
        {"inversion",
         {"rho", "n_proposals", "n_runs", "t_ac", "burn_in", "snapshot_every", "truth_source", "truth_steps", "noisy"}},
        {"stability", {"scales", "draws"}},
        {"output", {"x_min", "x_max", "x_points", "max_lag"}},
    };
    return s;
}

// Line of each "section.key" in the raw text, for error messages.
std::map<std::string, int> key_lines(std::string_view text) {
    std::map<std::string, int> out;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#' || line[b] == ';') continue;
        if (line[b] == '[') {
            const auto e = line.find(']', b);
            section = line.substr(b + 1, e == std::string::npos ? std::string::npos : e - b - 1);
            out.emplace("[" + section + "]", n);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(b, eq - b);
        key.erase(key.find_last_not_of(" \t") + 1);
        out.emplace(section.empty() ? key : section + "." + key, n);
    }
    return out;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::map<std::string, int> lines) : tree_(tree), lines_(std::move(lines)) {}

    bool has(const std::string& path) const { return tree_.get_child_optional(pt::ptree::path_type(path, '.')).has_value(); }

    std::string raw(const std::string& path) const {
        return tree_.get_child(pt::ptree::path_type(path, '.')).data();
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        auto it = lines_.find(path);
        throw ConfigError(path + ": " + msg, it == lines_.end() ? 0 : it->second);
    }

    double real(const std::string& path, double fallback) const {
        if (!has(path)) return fallback;
        auto nodes = nodes_of(path);
        if (nodes.size() != 1 || !nodes[0].is_number) fail(path, "expected a number");
        return nodes[0].number;
    }

    long integer(const std::string& path, long fallback) const {
        const double x = real(path, static_cast<double>(fallback));
        if (x != std::floor(x) || std::abs(x) > 9.0e15) fail(path, "expected an integer");
        return static_cast<long>(x);
    }

    std::uint64_t unsigned_integer(const std::string& path) const {
        const std::string s = trim(raw(path));
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) fail(path, "expected a non-negative integer");
        return v;
    }

    std::string word(const std::string& path, const std::string& fallback) const {
        return has(path) ? trim(raw(path)) : fallback;
    }

    bool boolean(const std::string& path, bool fallback) const {
        if (!has(path)) return fallback;
        const std::string s = trim(raw(path));
        if (s == "true") return true;
        if (s == "false") return false;
        fail(path, "expected true or false");
    }

    std::vector<double> reals(const std::string& path, std::vector<double> fallback) const {
        if (!has(path)) return fallback;
        std::vector<double> out;
        for (const auto& n : nodes_of(path)) {
            if (!n.is_number) fail(path, "expected a comma-separated list of numbers");
            out.push_back(n.number);
        }
        return out;
    }

    std::vector<Node> nodes_of(const std::string& path) const {
        try {
            return NodeParser(raw(path), path).list();
        } catch (const ConfigError& e) {
            auto it = lines_.find(path);
            throw ConfigError(e.what(), it == lines_.end() ? 0 : it->second);
        }
    }

    template <class F>
    auto with_line(const std::string& path, F&& f) const {
        try {
            return f();
        } catch (const ConfigError& e) {
            if (e.line() > 0) throw;
            auto it = lines_.find(path);
            throw ConfigError(e.what(), it == lines_.end() ? 0 : it->second);
        }
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    }

private:
    const pt::ptree& tree_;
    std::map<std::string, int> lines_;
};

template <class F>
void field_check(const std::string& field, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

}  // namespace

std::string observable_text(const Observable& A) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianBump>)
                return "gaussian(" + num(s.center) + ", " + num(s.exponent) + ")";
            else if constexpr (std::is_same_v<T, ScaledHermite>)
                return "hermite(" + std::to_string(s.order) + ", " + num(s.scale) + ")";
            else
                return "quadratic(" + num(s.exponent) + ")";
        },
        A.shape());
}

std::string observable_text(const TwoLevelObservable& A) {
    return std::string(A.placement == Placement::Diagonal ? "diagonal(" : "off_diagonal(") + observable_text(A.base) +
           ")";
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& field, const std::string& msg) {
        if (!ok) throw ConfigError(field + ": " + msg);
    };
    require(mass > 0.0 && std::isfinite(mass), "system.mass", "must be positive");
    require(beta > 0.0 && std::isfinite(beta), "system.beta", "must be positive");
    require(beads >= 1, "system.beads", "must be at least 1");
    require(truncation >= 0 && truncation <= 1000, "prior.truncation", "must lie in [0, 1000]");
    require(prior_scale > 0.0, "prior.scale", "must be positive");
    require(std::isfinite(prior_exponent), "prior.exponent", "must be finite");
    require(amplitude_scale > 0.0, "prior.amplitude_scale", "must be positive");
    require(n_train() > 0, "observables.train", "needs at least one observable");
    if (mode != Mode::Forward) require(n_test() > 0, "observables.test", "needs at least one observable");
    if (!noise_variances.empty())
        require(noise_variances.size() == n_train(), "noise.variances", "needs one variance per training observable");
    field_check("noise", [&] { (void)noise(); });
    field_check("sampler", [&] { sampler.resolved(ring()).validate(); });
    require(eta >= 0.0, "sampler.eta", "must be non-negative");
    field_check("inversion", [&] { inversion.validate(); });
    require(truth_steps > sampler.n_burnin, "inversion.truth_steps", "must exceed sampler.n_burnin");
    if (mode == Mode::Stability) {
        require(stability_scales.size() >= 3, "stability.scales", "needs at least 3 scales");
        for (double s : stability_scales) require(s > 0.0, "stability.scales", "must be positive");
        require(stability_draws >= 1, "stability.draws", "must be positive");
    }
    require(x_max > x_min, "output.x_max", "must exceed output.x_min");
    require(x_points >= 2, "output.x_points", "must be at least 2");
    require(max_lag >= 0, "output.max_lag", "must be non-negative");
    if (two_level()) field_check("system", [&] { truth2.validate(); });
    else if (truth.kind == TruthSpec::Kind::Coefficients) field_check("system.truth", [&] { truth.coeffs.validate(); });
}

void ExperimentConfig::apply_paper_scale() {
    inversion.n_runs = 10;
    inversion.n_proposals = 1600;
}

ExperimentConfig parse_config(std::string_view text) {
    std::string prepared;
    {
        // '#' comments become ';' comments so the INI reader skips them.
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            const auto b = line.find_first_not_of(" \t");
            if (b != std::string::npos && line[b] == '#') line[b] = ';';
            prepared += line + "\n";
        }
    }
    pt::ptree tree;
    try {
        std::istringstream in(prepared);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(e.message(), static_cast<int>(e.line()));
    }
    Reader r(tree, key_lines(text));

    // Sections and keys.
    for (const auto& [name, child] : tree) {
        if (child.empty()) {
            if (!schema().at("").count(name) && !schema().count(name)) r.fail(name, "unknown key");
            continue;
        }
        auto it = schema().find(name);
        if (it == schema().end() || name.empty()) r.fail("[" + name + "]", "unknown section");
        for (const auto& [key, leaf] : child) {
            if (!leaf.empty() || !it->second.count(key)) r.fail(name + "." + key, "unknown key");
        }
    }

    ExperimentConfig cfg;
    std::vector<std::string> missing;
    if (!r.has("mode")) missing.push_back("mode");
    if (!r.has("seed")) missing.push_back("seed");
    if (r.has("mode")) cfg.mode = r.with_line("mode", [&] { return parse_mode(Reader::trim(r.raw("mode"))); });
    if (cfg.two_level()) {
        for (const char* k : {"system.v00", "system.v11", "system.v01"})
            if (!r.has(k)) missing.push_back(k);
    } else if (!r.has("system.truth")) {
        missing.push_back("system.truth");
    }
    if (!r.has("observables.train")) missing.push_back("observables.train");
    if (!missing.empty()) throw ConfigError("missing required fields: " + join(missing));

    cfg.seed = r.unsigned_integer("seed");

    cfg.mass = r.real("system.mass", cfg.mass);
    cfg.beta = r.real("system.beta", cfg.beta);
    cfg.beads = static_cast<int>(r.integer("system.beads", cfg.beads));
    if (cfg.two_level()) {
        for (const char* k : {"system.truth"})
            if (r.has(k)) r.fail(k, "not used in twolevel mode (give v00, v11 and v01)");
        auto single = [&](const std::string& path) {
            auto nodes = r.nodes_of(path);
            if (nodes.size() != 1) r.fail(path, "expected coeffs(...) or harmonic");
            return r.with_line(path, [&] { return coeffs_from_node(nodes[0], path); });
        };
        cfg.truth2.v00 = single("system.v00");
        cfg.truth2.v11 = single("system.v11");
        for (const auto& n : r.nodes_of("system.v01")) {
            if (n.name != "gaussian") r.fail("system.v01", "expected gaussian(amplitude, center, sigma) components");
            auto a = r.with_line("system.v01", [&] { return numeric_args(n, 3, "system.v01"); });
            cfg.truth2.v01.push_back({a[0], a[1], a[2]});
        }
    } else {
        for (const char* k : {"system.v00", "system.v11", "system.v01"})
            if (r.has(k)) r.fail(k, "only used in twolevel mode");
        auto nodes = r.nodes_of("system.truth");
        if (nodes.size() != 1) r.fail("system.truth", "expected one of bump(A, k), coeffs(...), harmonic");
        const Node& n = nodes[0];
        if (n.name == "bump") {
            auto a = r.with_line("system.truth", [&] { return numeric_args(n, 2, "system.truth"); });
            cfg.truth.kind = TruthSpec::Kind::Bump;
            cfg.truth.bump = {a[0], a[1]};
        } else {
            cfg.truth.kind = TruthSpec::Kind::Coefficients;
            cfg.truth.coeffs = r.with_line("system.truth", [&] { return coeffs_from_node(n, "system.truth"); });
        }
    }

    cfg.truncation = static_cast<int>(r.integer("prior.truncation", cfg.truncation));
    cfg.prior_scale = r.real("prior.scale", cfg.prior_scale);
    cfg.prior_exponent = r.real("prior.exponent", cfg.prior_exponent);
    cfg.amplitude_scale = r.real("prior.amplitude_scale", cfg.amplitude_scale);

    for (const char* set : {"observables.train", "observables.test"}) {
        if (!r.has(set)) continue;
        const bool is_train = std::string(set) == "observables.train";
        for (const auto& n : r.nodes_of(set)) {
            if (cfg.two_level()) {
                auto A = r.with_line(set, [&] { return two_level_from_node(n, set); });
                (is_train ? cfg.train2 : cfg.test2).push_back(A);
            } else {
                auto A = r.with_line(set, [&] { return observable_from_node(n, set); });
                (is_train ? cfg.train : cfg.test).push_back(A);
            }
        }
    }

    cfg.noise_scale = r.real("noise.scale", cfg.noise_scale);
    cfg.noise_variances = r.reals("noise.variances", {});

    cfg.sampler.dt = r.real("sampler.dt", cfg.sampler.dt);
    cfg.sampler.gamma_f = r.real("sampler.gamma", cfg.sampler.gamma_f);
    cfg.sampler.n_steps = r.integer("sampler.n_steps", cfg.sampler.n_steps);
    cfg.sampler.n_burnin = r.integer("sampler.n_burnin", cfg.sampler.n_burnin);
    cfg.sampler.thin = r.integer("sampler.thin", cfg.sampler.thin);
    cfg.sampler.n_batches = static_cast<int>(r.integer("sampler.n_batches", cfg.sampler.n_batches));
    cfg.eta = r.real("sampler.eta", cfg.eta);

    cfg.inversion.rho = r.real("inversion.rho", cfg.inversion.rho);
    cfg.inversion.n_proposals = r.integer("inversion.n_proposals", cfg.inversion.n_proposals);
    cfg.inversion.n_runs = static_cast<int>(r.integer("inversion.n_runs", cfg.inversion.n_runs));
    cfg.inversion.t_ac = r.integer("inversion.t_ac", cfg.inversion.t_ac);
    cfg.inversion.burn_in = r.integer("inversion.burn_in", cfg.inversion.burn_in);
    cfg.inversion.snapshot_every = r.integer("inversion.snapshot_every", cfg.inversion.snapshot_every);
    const std::string source = r.word("inversion.truth_source", "exact");
    if (source == "exact") cfg.truth_source = TruthSource::Exact;
    else if (source == "forward") cfg.truth_source = TruthSource::Forward;
    else r.fail("inversion.truth_source", "expected exact or forward");
    cfg.truth_steps = r.integer("inversion.truth_steps", cfg.truth_steps);
    cfg.noisy = r.boolean("inversion.noisy", cfg.noisy);

    cfg.stability_scales = r.reals("stability.scales", cfg.stability_scales);
    cfg.stability_draws = static_cast<int>(r.integer("stability.draws", cfg.stability_draws));

    cfg.x_min = r.real("output.x_min", cfg.x_min);
    cfg.x_max = r.real("output.x_max", cfg.x_max);
    cfg.x_points = static_cast<int>(r.integer("output.x_points", cfg.x_points));
    cfg.max_lag = r.integer("output.max_lag", cfg.max_lag);

    // Validation errors point at the offending line when the field was given.
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        const std::string field = msg.substr(0, msg.find(':'));
        auto lines = key_lines(text);
        auto it = lines.find(field);
        if (it != lines.end()) throw ConfigError(msg, it->second);
        throw;
    }
    return cfg;
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "mode = " << mode_name(cfg.mode) << "\n";
    out << "seed = " << cfg.seed << "\n";

    out << "\n[system]\n";
    out << "mass = " << num(cfg.mass) << "\n";
    out << "beta = " << num(cfg.beta) << "\n";
    out << "beads = " << cfg.beads << "\n";
    if (cfg.two_level()) {
        out << "v00 = " << coeffs_text(cfg.truth2.v00) << "\n";
        out << "v11 = " << coeffs_text(cfg.truth2.v11) << "\n";
        std::vector<std::string> parts;
        for (const auto& c : cfg.truth2.v01)
            parts.push_back("gaussian(" + num(c.amplitude) + ", " + num(c.center) + ", " + num(c.sigma) + ")");
        out << "v01 = " << join(parts) << "\n";
    } else if (cfg.truth.kind == TruthSpec::Kind::Bump) {
        out << "truth = bump(" << num(cfg.truth.bump.amplitude) << ", " << num(cfg.truth.bump.wavenumber) << ")\n";
    } else {
        out << "truth = " << coeffs_text(cfg.truth.coeffs) << "\n";
    }

    out << "\n[prior]\n";
    out << "truncation = " << cfg.truncation << "\n";
    out << "scale = " << num(cfg.prior_scale) << "\n";
    out << "exponent = " << num(cfg.prior_exponent) << "\n";
    out << "amplitude_scale = " << num(cfg.amplitude_scale) << "\n";

    out << "\n[observables]\n";
    std::vector<std::string> train, test;
    if (cfg.two_level()) {
        for (const auto& A : cfg.train2) train.push_back(observable_text(A));
        for (const auto& A : cfg.test2) test.push_back(observable_text(A));
    } else {
        for (const auto& A : cfg.train) train.push_back(observable_text(A));
        for (const auto& A : cfg.test) test.push_back(observable_text(A));
    }
    out << "train = " << join(train) << "\n";
    if (!test.empty()) out << "test = " << join(test) << "\n";

    out << "\n[noise]\n";
    out << "scale = " << num(cfg.noise_scale) << "\n";
    if (!cfg.noise_variances.empty()) {
        std::vector<std::string> parts;
        for (double v : cfg.noise_variances) parts.push_back(num(v));
        out << "variances = " << join(parts) << "\n";
    }

    out << "\n[sampler]\n";
    out << "dt = " << num(cfg.sampler.dt) << "\n";
    out << "gamma = " << num(cfg.sampler.gamma_f) << "\n";
    out << "n_steps = " << cfg.sampler.n_steps << "\n";
    out << "n_burnin = " << cfg.sampler.n_burnin << "\n";
    out << "thin = " << cfg.sampler.thin << "\n";
    out << "n_batches = " << cfg.sampler.n_batches << "\n";
    out << "eta = " << num(cfg.eta) << "\n";

    out << "\n[inversion]\n";
    out << "rho = " << num(cfg.inversion.rho) << "\n";
    out << "n_proposals = " << cfg.inversion.n_proposals << "\n";
    out << "n_runs = " << cfg.inversion.n_runs << "\n";
    out << "t_ac = " << cfg.inversion.t_ac << "\n";
    out << "burn_in = " << cfg.inversion.burn_in << "\n";
    out << "snapshot_every = " << cfg.inversion.snapshot_every << "\n";
    out << "truth_source = " << (cfg.truth_source == TruthSource::Exact ? "exact" : "forward") << "\n";
    out << "truth_steps = " << cfg.truth_steps << "\n";
    out << "noisy = " << (cfg.noisy ? "true" : "false") << "\n";

    out << "\n[stability]\n";
    std::vector<std::string> scales;
    for (double s : cfg.stability_scales) scales.push_back(num(s));
    out << "scales = " << join(scales) << "\n";
    out << "draws = " << cfg.stability_draws << "\n";

    out << "\n[output]\n";
    out << "x_min = " << num(cfg.x_min) << "\n";
    out << "x_max = " << num(cfg.x_max) << "\n";
    out << "x_points = " << cfg.x_points << "\n";
    out << "max_lag = " << cfg.max_lag << "\n";
    return out.str();
}

}  // namespace qti
