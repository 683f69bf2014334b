#include "qti/experiment.hpp"

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "qti/errors.hpp"

namespace qti {

namespace fs = std::filesystem;

std::string git_blob_sha1(std::string_view content) {
    const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, content.data(), content.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        const unsigned char c = digest[i];
        out += hex[c >> 4];
        out += hex[c & 15];
    }
    return out;
}

namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kForwardStream = 3;
constexpr std::uint64_t kInversionStream = 4;
constexpr std::uint64_t kStabilityStream = 5;

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Collects the files of one experiment and their hashes.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        files_.push_back({{"file", name}, {"sha1", git_blob_sha1(content)}});
    }

    const nlohmann::json& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    nlohmann::json files_ = nlohmann::json::array();
};

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + csv_field(header[i]);
        text_ += "\n";
    }

    Csv& cell(const std::string& s) {
        text_ += (first_ ? "" : ",") + csv_field(s);
        first_ = false;
        return *this;
    }
    Csv& cell(double x) { return cell(num(x)); }
    Csv& cell(long x) { return cell(std::to_string(x)); }
    Csv& cell(int x) { return cell(std::to_string(x)); }
    Csv& cell(std::size_t x) { return cell(std::to_string(x)); }
    void end() {
        text_ += "\n";
        first_ = true;
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
    bool first_ = true;
};

std::vector<double> x_grid(const ExperimentConfig& cfg) {
    std::vector<double> xs(static_cast<std::size_t>(cfg.x_points));
    for (int i = 0; i < cfg.x_points; ++i)
        xs[static_cast<std::size_t>(i)] = cfg.x_min + (cfg.x_max - cfg.x_min) * i / (cfg.x_points - 1);
    return xs;
}

struct Truth {
    std::vector<double> y_star;       // training data fed to the inversion
    std::vector<double> train_exact;  // oracle values of the training observables
    std::vector<double> test_exact;   // oracle values of the test observables
};

LangevinConfig truth_sampler(const ExperimentConfig& cfg) {
    LangevinConfig lc = cfg.sampler;
    lc.n_steps = cfg.truth_steps;
    lc.seed = derive_seed(cfg.seed, kTruthStream);
    return lc;
}

Truth make_truth(const ExperimentConfig& cfg) {
    Truth t;
    if (cfg.two_level()) {
        t.train_exact = exact_thermal_averages_2level(cfg.truth2, cfg.train2, cfg.beta, cfg.mass);
        t.test_exact = exact_thermal_averages_2level(cfg.truth2, cfg.test2, cfg.beta, cfg.mass);
    } else {
        const Potential V = cfg.truth.potential();
        t.train_exact = exact_thermal_averages(V, cfg.train, cfg.beta, cfg.mass);
        t.test_exact = exact_thermal_averages(V, cfg.test, cfg.beta, cfg.mass);
    }
    if (cfg.truth_source == TruthSource::Exact) {
        t.y_star = t.train_exact;
    } else {
        const auto est = cfg.two_level()
                             ? pimd_sh_estimate(cfg.truth2, cfg.train2, cfg.ring(), truth_sampler(cfg), cfg.eta)
                             : forward_estimate(cfg.truth.potential(), cfg.train, cfg.ring(), truth_sampler(cfg));
        for (const auto& e : est) t.y_star.push_back(e.mean);
    }
    if (cfg.noisy) {
        RandomStream rng(derive_seed(cfg.seed, kNoiseStream));
        const auto eta = cfg.noise().sample(rng);
        for (std::size_t i = 0; i < eta.size(); ++i) t.y_star[i] += eta[i];
    }
    return t;
}

std::vector<std::string> train_names(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.two_level())
        for (const auto& A : cfg.train2) out.push_back(observable_text(A));
    else
        for (const auto& A : cfg.train) out.push_back(observable_text(A));
    return out;
}

std::vector<std::string> test_names(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.two_level())
        for (const auto& A : cfg.test2) out.push_back(observable_text(A));
    else
        for (const auto& A : cfg.test) out.push_back(observable_text(A));
    return out;
}

std::unique_ptr<ForwardModel> make_model(const ExperimentConfig& cfg) {
    LangevinConfig lc = cfg.sampler;
    if (cfg.two_level()) {
        auto shape = cfg.truth2.v01;
        return std::make_unique<TwoLevelForward>(cfg.prior(), cfg.prior(), shape, cfg.amplitude_scale, cfg.train2,
                                                 cfg.test2, cfg.ring(), lc, cfg.eta);
    }
    return std::make_unique<OneLevelForward>(cfg.prior(), cfg.train, cfg.test, cfg.ring(), lc);
}

// Truth curves on the output grid, one row per surface of the model.
std::vector<std::vector<double>> truth_surfaces(const ExperimentConfig& cfg, const std::vector<double>& xs) {
    std::vector<std::vector<double>> rows;
    if (cfg.two_level()) {
        rows.resize(3);
        for (double x : xs) {
            rows[0].push_back(potential_eval(cfg.truth2.v00, x));
            rows[1].push_back(potential_eval(cfg.truth2.v11, x));
            rows[2].push_back(cfg.truth2.coupling(x));
        }
    } else {
        const Potential V = cfg.truth.potential();
        rows.resize(1);
        for (double x : xs) rows[0].push_back(V.value(x));
    }
    return rows;
}

void write_forward_check(const ExperimentConfig& cfg, const Truth& truth, OutputDir& out, nlohmann::json& summary) {
    LangevinConfig lc = cfg.sampler;
    lc.seed = derive_seed(cfg.seed, kForwardStream);
    std::vector<ForwardEstimate> est;
    if (cfg.two_level()) {
        std::vector<TwoLevelObservable> all = cfg.train2;
        all.insert(all.end(), cfg.test2.begin(), cfg.test2.end());
        est = pimd_sh_estimate(cfg.truth2, all, cfg.ring(), lc, cfg.eta);
    } else {
        std::vector<Observable> all = cfg.train;
        all.insert(all.end(), cfg.test.begin(), cfg.test.end());
        est = forward_estimate(cfg.truth.potential(), all, cfg.ring(), lc);
    }
    const auto tr = train_names(cfg);
    const auto te = test_names(cfg);
    Csv csv({"observable_id", "set", "observable", "mean", "std_err", "n_samples", "exact"});
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < est.size(); ++k) {
        const bool is_train = k < tr.size();
        const std::size_t j = is_train ? k : k - tr.size();
        const double exact = is_train ? truth.train_exact[j] : truth.test_exact[j];
        csv.cell(k).cell(is_train ? "train" : "test").cell(is_train ? tr[j] : te[j]);
        csv.cell(est[k].mean).cell(est[k].std_err).cell(est[k].n_samples).cell(exact);
        csv.end();
        rows.push_back({{"observable", is_train ? tr[j] : te[j]},
                        {"mean", est[k].mean},
                        {"std_err", est[k].std_err},
                        {"exact", exact}});
    }
    out.write("observables.csv", csv.text());
    summary["forward"] = rows;
}

void write_inversion(const ExperimentConfig& cfg, const Truth& truth, OutputDir& out, nlohmann::json& summary,
                     nlohmann::json& seeds, bool& failed, int workers) {
    const auto model = make_model(cfg);
    const auto noise = cfg.noise();
    InversionConfig inv = cfg.inversion;
    inv.seed = derive_seed(cfg.seed, kInversionStream);
    inv.workers = workers;
    const InversionResult result = run_inversion(*model, truth.y_star, noise, inv);
    const std::size_t n_train = model->n_train();
    const std::size_t n_test = model->n_test();
    const auto te = test_names(cfg);
    const auto tr = train_names(cfg);

    {
        Csv csv({"observable_id", "observable", "y_star", "exact"});
        for (std::size_t i = 0; i < n_train; ++i) {
            csv.cell(i).cell(tr[i]).cell(truth.y_star[i]).cell(truth.train_exact[i]);
            csv.end();
        }
        out.write("y_star.csv", csv.text());
    }

    // Per-run chains and potential snapshots.
    seeds["runs"] = nlohmann::json::array();
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const RunResult& run = result.runs[r];
        seeds["runs"].push_back(run.seed);
        std::vector<std::string> header{"iteration", "phi", "accepted"};
        for (std::size_t i = 0; i < n_train; ++i) header.push_back("y_hat_" + std::to_string(i));
        for (std::size_t j = 0; j < n_test; ++j) header.push_back("test_" + std::to_string(j));
        Csv csv(header);
        std::string snapshots;
        for (const auto& rec : run.chain) {
            csv.cell(rec.iteration).cell(rec.phi).cell(rec.accepted ? 1 : 0);
            for (double y : rec.y_hat) csv.cell(y);
            for (double y : rec.test) csv.cell(y);
            csv.end();
            if (rec.iteration % inv.snapshot_every == 0) {
                nlohmann::json snap = {{"iteration", rec.iteration},
                                       {"coords", rec.coords},
                                       {"potential", model->describe(rec.coords)}};
                snapshots += snap.dump() + "\n";
            }
        }
        out.write("chain_run" + std::to_string(r) + ".csv", csv.text());
        out.write("snapshots_run" + std::to_string(r) + ".jsonl", snapshots);
    }

    {
        Csv csv({"run", "seed", "proposals", "accepted", "rate", "failure"});
        for (std::size_t r = 0; r < result.runs.size(); ++r) {
            const auto& run = result.runs[r];
            csv.cell(r).cell(std::to_string(run.seed)).cell(static_cast<long>(run.chain.empty() ? 0 : run.chain.size() - 1));
            csv.cell(run.accepted).cell(run.acceptance_rate()).cell(run.failure);
            csv.end();
            if (!run.failure.empty()) failed = true;
        }
        out.write("acceptance.csv", csv.text());
    }

    std::vector<const RunResult*> ok;
    for (const auto& run : result.runs)
        if (run.failure.empty()) ok.push_back(&run);
    if (ok.empty()) {
        summary["inversion"] = {{"failed", true}};
        return;
    }
    const std::vector<double> initial = ok.front()->chain.front().test;

    // Running averages along the iterations (only the thinned samples count).
    {
        Csv csv({"iteration", "observable_id", "observable", "mean", "two_se_runs", "two_se_pooled", "truth",
                 "initial"});
        const long last = static_cast<long>(ok.front()->chain.size()) - 1;
        for (long k : thinned_iterations(last + 1, inv.burn_in, inv.t_ac)) {
            const auto pred = summarize_predictions(result.runs, n_test, inv.burn_in, inv.t_ac, k);
            for (std::size_t j = 0; j < n_test; ++j) {
                csv.cell(k).cell(j).cell(te[j]).cell(pred[j].mean).cell(2.0 * pred[j].se_across_runs);
                csv.cell(2.0 * pred[j].se_pooled).cell(truth.test_exact[j]).cell(initial[j]);
                csv.end();
            }
        }
        out.write("predictions.csv", csv.text());
    }

    // Averaged potential surfaces over the same samples.
    {
        const auto xs = x_grid(cfg);
        const auto names = model->surface_names();
        const auto truth_rows = truth_surfaces(cfg, xs);
        const auto init_rows = model->surfaces(model->origin(), xs);
        std::vector<std::vector<double>> sum(names.size(), std::vector<double>(xs.size(), 0.0));
        auto sq = sum;
        long n = 0;
        for (const RunResult* run : ok)
            for (long k : thinned_iterations(static_cast<long>(run->chain.size()), inv.burn_in, inv.t_ac)) {
                const auto rows = model->surfaces(run->chain[static_cast<std::size_t>(k)].coords, xs);
                for (std::size_t s = 0; s < rows.size(); ++s)
                    for (std::size_t i = 0; i < xs.size(); ++i) {
                        sum[s][i] += rows[s][i];
                        sq[s][i] += rows[s][i] * rows[s][i];
                    }
                ++n;
            }
        std::vector<std::string> header{"x"};
        for (const auto& name : names)
            for (const char* col : {"_mean", "_two_se", "_truth", "_initial"}) header.push_back(name + col);
        Csv csv(header);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            csv.cell(xs[i]);
            for (std::size_t s = 0; s < names.size(); ++s) {
                const double m = sum[s][i] / static_cast<double>(n);
                const double var = n > 1 ? std::max(0.0, (sq[s][i] - n * m * m) / static_cast<double>(n - 1)) : 0.0;
                csv.cell(m).cell(2.0 * std::sqrt(var / static_cast<double>(n))).cell(truth_rows[s][i]).cell(init_rows[s][i]);
            }
            csv.end();
        }
        out.write("potential.csv", csv.text());
    }

    // Autocorrelation of the post-burn-in test and coordinate series, averaged over runs.
    nlohmann::json acf_at_t_ac = nlohmann::json::array();
    {
        const std::size_t n_xi = model->n_gaussian();
        const long len = static_cast<long>(ok.front()->chain.size()) - inv.burn_in;
        const long max_lag = std::min(cfg.max_lag, len - 1);
        std::vector<std::string> header{"lag"};
        for (std::size_t j = 0; j < n_test; ++j) header.push_back("test_" + std::to_string(j));
        for (std::size_t i = 0; i < n_xi; ++i) header.push_back("xi_" + std::to_string(i));
        std::vector<std::vector<double>> acf(n_test + n_xi, std::vector<double>(static_cast<std::size_t>(max_lag) + 1, 0.0));
        if (max_lag >= 0) {
            for (const RunResult* run : ok)
                for (std::size_t c = 0; c < acf.size(); ++c) {
                    std::vector<double> series;
                    for (std::size_t k = static_cast<std::size_t>(inv.burn_in); k < run->chain.size(); ++k)
                        series.push_back(c < n_test ? run->chain[k].test[c] : run->chain[k].coords.xi[c - n_test]);
                    const auto a = autocorrelation(series, max_lag);
                    for (std::size_t l = 0; l < a.acf.size(); ++l) acf[c][l] += a.acf[l] / static_cast<double>(ok.size());
                }
        }
        Csv csv(header);
        for (long l = 0; l <= max_lag; ++l) {
            csv.cell(l);
            for (const auto& col : acf) csv.cell(col[static_cast<std::size_t>(l)]);
            csv.end();
        }
        out.write("autocorrelation.csv", csv.text());
        if (inv.t_ac <= max_lag)
            for (std::size_t j = 0; j < n_test; ++j) acf_at_t_ac.push_back(acf[j][static_cast<std::size_t>(inv.t_ac)]);
    }

    const auto& pred = result.predictions;
    double mse0 = 0.0, mse = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < n_test; ++j) {
        mse0 += std::pow(initial[j] - truth.test_exact[j], 2) / static_cast<double>(n_test);
        mse += std::pow(pred[j].mean - truth.test_exact[j], 2) / static_cast<double>(n_test);
        rows.push_back({{"observable", te[j]},
                        {"mean", pred[j].mean},
                        {"se_runs", pred[j].se_across_runs},
                        {"se_pooled", pred[j].se_pooled},
                        {"n_samples", pred[j].n_samples},
                        {"truth", truth.test_exact[j]},
                        {"initial", initial[j]}});
    }
    nlohmann::json rates = nlohmann::json::array();
    for (const auto& run : result.runs) rates.push_back(run.acceptance_rate());
    summary["inversion"] = {{"predictions", rows},          {"mse_initial", mse0},
                            {"mse_final", mse},             {"acceptance", rates},
                            {"acf_at_t_ac", acf_at_t_ac},   {"failed", failed}};
}

void write_stability(const ExperimentConfig& cfg, const Truth& truth, OutputDir& out, nlohmann::json& summary,
                     nlohmann::json& seeds, int workers) {
    const auto model = make_model(cfg);
    StabilityConfig sc;
    sc.gamma_scales = cfg.stability_scales;
    sc.draws = cfg.stability_draws;
    sc.inversion = cfg.inversion;
    sc.workers = workers;
    sc.seed = derive_seed(cfg.seed, kStabilityStream);
    seeds["stability"] = sc.seed;
    // The sweep perturbs noiseless data itself.
    std::vector<double> y = truth.y_star;
    const StabilityReport report = stability_sweep(*model, y, truth.test_exact, sc);
    out.write("stability.csv", stability_csv(report));
    nlohmann::json j = report;
    out.write("stability.json", j.dump(2) + "\n");
    Csv csv({"scale", "draw", "observable_id", "prediction", "abs_error", "mean_acceptance"});
    for (const auto& d : report.draws) {
        double acc = 0.0;
        for (double a : d.acceptance) acc += a / static_cast<double>(d.acceptance.size());
        for (std::size_t k = 0; k < d.predictions.size(); ++k) {
            csv.cell(report.gamma_scales[d.scale_index]).cell(d.draw).cell(k).cell(d.predictions[k]);
            csv.cell(d.abs_errors[k]).cell(acc);
            csv.end();
        }
    }
    out.write("stability_draws.csv", csv.text());
    summary["stability"] = j;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    if (opt.workers < 1) throw InvalidArgumentError("workers must be positive");
    const auto start = std::chrono::steady_clock::now();
    const std::string config_text = canonical_config(cfg);
    OutputDir out(opt.out_dir);
    out.write("config.cfg", config_text);

    nlohmann::json summary = {{"mode", mode_name(cfg.mode)}};
    nlohmann::json seeds = {{"master", cfg.seed}};
    bool failed = false;
    std::string failure;
    try {
        const Truth truth = make_truth(cfg);
        switch (cfg.mode) {
            case Mode::Forward:
                write_forward_check(cfg, truth, out, summary);
                break;
            case Mode::Invert:
                write_inversion(cfg, truth, out, summary, seeds, failed, opt.workers);
                break;
            case Mode::Stability:
                write_stability(cfg, truth, out, summary, seeds, opt.workers);
                break;
            case Mode::TwoLevel:
                write_forward_check(cfg, truth, out, summary);
                write_inversion(cfg, truth, out, summary, seeds, failed, opt.workers);
                break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        failed = true;
        failure = e.what();
        summary["error"] = failure;
    }
    out.write("summary.json", summary.dump(2) + "\n");

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest = {
        {"tool", "qti"},
        {"version", kVersion},
        {"mode", mode_name(cfg.mode)},
        {"config", config_text},
        {"input_hash", git_blob_sha1(config_text)},
        {"seeds", seeds},
        {"workers", opt.workers},
        {"paper_scale", opt.paper_scale},
        {"started_utc", utc_now()},
        {"wall_clock_seconds", seconds},
        {"versions",
         {{"qti", kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT}}},
        {"outputs", out.files()},
        {"status", failed ? "failed" : "ok"},
    };
    if (!failure.empty()) manifest["failure"] = failure;
    {
        std::ofstream f(out.dir() / "manifest.json");
        f << manifest.dump(2) << "\n";
    }
    if (failed) throw DivergenceError(failure.empty() ? "one or more chains failed; see acceptance.csv" : failure);
    return manifest;
}

nlohmann::json replay_manifest(const nlohmann::json& manifest, const RunOptions& opt) {
    if (!manifest.contains("config") || !manifest.contains("outputs"))
        throw ConfigError("manifest: missing config or outputs");
    const ExperimentConfig cfg = parse_config(manifest.at("config").get<std::string>());
    RunOptions o = opt;
    o.paper_scale = manifest.value("paper_scale", false);
    nlohmann::json fresh = run_experiment(cfg, o);
    nlohmann::json mismatches = nlohmann::json::array();
    std::map<std::string, std::string> before;
    for (const auto& f : manifest.at("outputs")) before[f.at("file")] = f.at("sha1");
    std::map<std::string, std::string> after;
    for (const auto& f : fresh.at("outputs")) after[f.at("file")] = f.at("sha1");
    for (const auto& [name, sha] : before)
        if (!after.count(name) || after[name] != sha) mismatches.push_back(name);
    for (const auto& [name, sha] : after)
        if (!before.count(name)) mismatches.push_back(name);
    fresh["replay"] = {{"source_input_hash", manifest.value("input_hash", "")},
                       {"identical", mismatches.empty()},
                       {"mismatches", mismatches}};
    std::ofstream f(opt.out_dir / "manifest.json");
    f << fresh.dump(2) << "\n";
    return fresh;
}

}  // namespace qti
