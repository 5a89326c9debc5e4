// Command-line front end: dataset generation, fitting, evaluation, density
// grids, and benchmark suites. Exit codes: 0 ok, 2 config error, 3 numerical
// failure.

#include "kdsm/baselines.hpp"
#include "kdsm/io.hpp"
#include "kdsm/metrics.hpp"
#include "kdsm/samplers.hpp"
#include "kdsm/synthetic.hpp"
#include "kdsm/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

using nlohmann::json;
using namespace kdsm;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

json parse_config(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidSpecError(std::string("config is not valid JSON: ") + e.what());
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw InvalidSpecError("unknown config key '" + it.key() + "' in " + where);
}

KernelSpec kernel_from_config(const json& j, int d) {
    KernelSpec spec;
    if (j.contains("kernel")) {
        const json& k = j["kernel"];
        check_keys(k, {"family", "lengthscales", "arccos_order"}, "kernel");
        std::string family = k.value("family", "rbf");
        if (family == "rbf")
            spec.family = KernelFamily::Rbf;
        else if (family == "arccos")
            spec.family = KernelFamily::ArcCos;
        else
            throw InvalidSpecError("unknown kernel family: " + family);
        if (k.contains("lengthscales")) {
            const auto& ls = k["lengthscales"];
            spec.lengthscales.resize(static_cast<long>(ls.size()));
            for (long i = 0; i < spec.lengthscales.size(); ++i)
                spec.lengthscales[i] = ls[static_cast<std::size_t>(i)].get<double>();
        }
        spec.arccos_order = k.value("arccos_order", 2);
    }
    if (spec.family == KernelFamily::Rbf && spec.lengthscales.size() == 0)
        spec.lengthscales = Vector::Ones(d);
    spec.validate(d);
    return spec;
}

BaseDensityKind q0_kind_from_name(const std::string& name) {
    if (name == "uniform") return BaseDensityKind::UniformBox;
    if (name == "gaussian") return BaseDensityKind::Gaussian;
    if (name == "gmm") return BaseDensityKind::Gmm;
    throw InvalidSpecError("unknown q0 kind: " + name);
}

Matrix load_data(const std::string& path) {
    CsvData csv = read_csv(path);
    if (csv.values.rows() < 1) throw InvalidSpecError("no data rows in " + path);
    return csv.values;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const std::string& family, int n, std::uint64_t seed, const std::string& out) {
    Synthetic2D dist = make_distribution(family);
    Matrix X = synth_sample(dist, n, seed);
    write_csv(out, X, {"x1", "x2"});
    std::cout << "wrote " << n << " rows to " << out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOutcome {
    DensityModel model;  // RFF-basis methods only
    bool has_model = false;
    double wall_time = 0.0;
    json hyper;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
};

void split_train_val(const Matrix& X, std::uint64_t seed, Matrix& train, Matrix& val) {
    const int n = static_cast<int>(X.rows());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    auto rng = make_rng(derive_seed(seed, 555));
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(idx[i], idx[pick(rng)]);
    }
    const int nv = std::max(1, n / 5);
    const int nt = n - nv;
    train.resize(nt, X.cols());
    val.resize(nv, X.cols());
    for (int i = 0; i < nt; ++i) train.row(i) = X.row(idx[i]);
    for (int i = 0; i < nv; ++i) val.row(i) = X.row(idx[nt + i]);
}

int cmd_fit(const std::string& config_path, std::uint64_t seed) {
    json cfg = parse_config(config_path);
    check_keys(cfg,
               {"data", "kernel", "M", "q0", "q0_components", "method", "lambda", "sigma",
                "m_inducing", "standardize", "normalizer_draws", "tune", "model_out",
                "report_out", "seed"},
               "fit config");
    if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    if (!cfg.contains("data")) throw InvalidSpecError("fit config needs 'data'");
    if (!cfg.contains("model_out")) throw InvalidSpecError("fit config needs 'model_out'");

    Matrix X = load_data(cfg["data"].get<std::string>());
    const int d = static_cast<int>(X.cols());

    Vector std_mean, std_scale;
    if (cfg.value("standardize", false)) {
        std_mean = X.colwise().mean().transpose();
        std_scale.resize(d);
        for (int i = 0; i < d; ++i) {
            double var = (X.col(i).array() - std_mean[i]).square().mean();
            std_scale[i] = std::sqrt(std::max(var, 1e-24));
            X.col(i) = (X.col(i).array() - std_mean[i]) / std_scale[i];
        }
    }

    KernelSpec spec = kernel_from_config(cfg, d);
    const int M = cfg.value("M", 512);
    const std::string method = cfg.value("method", "dsm");
    const double lambda = cfg.value("lambda", 1e-3);
    const double sigma = cfg.value("sigma", 0.0);
    BaseDensityKind q0_kind = q0_kind_from_name(cfg.value("q0", "gaussian"));
    const int q0_k = cfg.value("q0_components", 2);
    const int nz = cfg.value("normalizer_draws", 20000);

    Matrix Xt, Xv;
    split_train_val(X, seed, Xt, Xv);

    FitOutcome out;
    double t0 = now_seconds();

    if (cfg.contains("tune")) {
        if (method != "dsm")
            throw InvalidSpecError("tuning is supported for the dsm method only");
        const json& t = cfg["tune"];
        check_keys(t,
                   {"optimizer", "iterations", "learning_rate", "subsample", "lambda_grid",
                    "sigma_grid", "lambda0", "sigma0", "tune_lengthscales"},
                   "tune config");
        TuneConfig tc;
        std::string opt = t.value("optimizer", "adam");
        if (opt == "adam")
            tc.optimizer = TuneOptimizer::Adam;
        else if (opt == "grid")
            tc.optimizer = TuneOptimizer::Grid;
        else
            throw InvalidSpecError("unknown tune optimizer: " + opt);
        tc.iterations = t.value("iterations", 60);
        tc.learning_rate = t.value("learning_rate", 0.1);
        tc.subsample = t.value("subsample", 512);
        tc.lambda0 = t.value("lambda0", lambda);
        tc.sigma0 = t.value("sigma0", sigma > 0.0 ? sigma : 0.1);
        tc.tune_lengthscales = t.value("tune_lengthscales", true);
        if (t.contains("lambda_grid"))
            tc.lambda_grid = t["lambda_grid"].get<std::vector<double>>();
        if (t.contains("sigma_grid"))
            tc.sigma_grid = t["sigma_grid"].get<std::vector<double>>();
        tc.normalizer_draws = nz;
        tc.seed = seed;
        TuneResult tr = tune(X, spec, q0_kind, M, tc);
        out.model = tr.model;
        out.has_model = true;
        out.hyper["lambda"] = tr.lambda;
        out.hyper["sigma"] = tr.sigma;
        if (tr.lengthscales.size() > 0) {
            json ls = json::array();
            for (long i = 0; i < tr.lengthscales.size(); ++i) ls.push_back(tr.lengthscales[i]);
            out.hyper["lengthscales"] = ls;
        }
    } else if (method == "dsm" || method == "sm" || method == "taylor") {
        const double sig = method == "sm" ? 0.0 : sigma;
        FeatureMap map = sample_feature_map(spec, d, M, derive_seed(seed, 777));
        BaseDensity q0 = fit_q0(q0_kind, Xt, q0_k, derive_seed(seed, 888));
        FitConfig fc;
        fc.lambda = lambda;
        fc.noise = NoiseSpec{sig};
        Coefficients coeffs;
        if (method == "taylor") {
            coeffs = taylor_dsm_fit(map, Xt, q0, lambda, sig);
        } else {
            ConvolvedSystem sys = spec.family == KernelFamily::Rbf
                                      ? build_system_rbf(map, Xt, fc.noise, q0)
                                      : build_system_arccos(map, Xt, fc.noise, q0);
            coeffs = fit_dsm(sys, fc);
            if (method == "sm") coeffs.provenance = Provenance::SmPlain;
        }
        out.model = DensityModel{coeffs, map, q0, std::nullopt};
        if (q0.kind != BaseDensityKind::UniformBox && nz > 0)
            out.model.log_Z = estimate_log_Z(out.model, nz, derive_seed(seed, 999)).log_Z;
        out.has_model = true;
        out.hyper = {{"lambda", lambda}, {"sigma", sig}, {"M", M}};
    } else if (method == "nystrom") {
        const int m_ind = cfg.value("m_inducing", std::min<int>(300, (int)X.rows()));
        NystromModel nm = fit_nystrom(Xt, spec, m_ind, lambda, NoiseSpec{sigma}, seed);
        out.hyper = {{"lambda", lambda}, {"sigma", sigma}, {"m_inducing", m_ind}};
        // score-matching losses from the evaluators (flat base density)
        auto sm_loss = [&nm](const Matrix& Xs) {
            double acc = 0.0;
            for (long a = 0; a < Xs.rows(); ++a) {
                Vector x = Xs.row(a).transpose();
                acc += nystrom_f_laplacian(nm, x) + 0.5 * nystrom_f_grad(nm, x).squaredNorm();
            }
            return acc / static_cast<double>(Xs.rows());
        };
        out.wall_time = now_seconds() - t0;
        out.train_loss = sm_loss(Xt);
        out.validation_loss = sm_loss(Xv);
        json report = {{"method", method},
                       {"wall_time_seconds", out.wall_time},
                       {"train_loss", out.train_loss},
                       {"validation_loss", out.validation_loss},
                       {"hyperparameters", out.hyper}};
        if (cfg.contains("report_out"))
            write_file(cfg["report_out"].get<std::string>(), report.dump(2) + "\n");

        // same file envelope, nystrom payload under its provenance tag
        json mj;
        mj["version"] = "kdsm-model/1";
        mj["provenance"] = "nystrom";
        mj["kernel"] = {{"family", "rbf"}, {"arccos_order", 2}};
        json ls = json::array();
        for (long i = 0; i < spec.lengthscales.size(); ++i) ls.push_back(spec.lengthscales[i]);
        mj["kernel"]["lengthscales"] = ls;
        mj["d"] = d;
        mj["inducing"] = base64_encode(nm.Z.data(), static_cast<std::size_t>(nm.Z.size()));
        mj["alpha"] = base64_encode(nm.alpha.data(), static_cast<std::size_t>(nm.alpha.size()));
        write_file(cfg["model_out"].get<std::string>(), mj.dump(2) + "\n");
        std::cout << "fit ok (nystrom), wall time " << out.wall_time << " s\n";
        return 0;
    } else {
        throw InvalidSpecError("unknown fit method: " + method);
    }

    out.wall_time = now_seconds() - t0;
    out.model.standardize_mean = std_mean;
    out.model.standardize_scale = std_scale;
    out.train_loss = validation_sm_loss(out.model, Xt).total;
    out.validation_loss = validation_sm_loss(out.model, Xv).total;
    if (!std::isfinite(out.train_loss) || !std::isfinite(out.validation_loss))
        throw NumericalError("fit produced a non-finite loss");

    save_model(cfg["model_out"].get<std::string>(), out.model);
    json report = {{"method", method},
                   {"wall_time_seconds", out.wall_time},
                   {"train_loss", out.train_loss},
                   {"validation_loss", out.validation_loss},
                   {"hyperparameters", out.hyper}};
    if (cfg.contains("report_out"))
        write_file(cfg["report_out"].get<std::string>(), report.dump(2) + "\n");
    std::cout << "fit ok, validation loss " << out.validation_loss << ", wall time "
              << out.wall_time << " s\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

Matrix standardized(const DensityModel& model, Matrix X) {
    if (model.standardize_mean.size() == 0) return X;
    for (long i = 0; i < X.cols(); ++i)
        X.col(i) = (X.col(i).array() - model.standardize_mean[i]) / model.standardize_scale[i];
    return X;
}

int cmd_eval(const std::string& config_path, std::uint64_t seed) {
    json cfg = parse_config(config_path);
    check_keys(cfg, {"model", "data", "metrics", "family", "out", "mala", "seed"},
               "eval config");
    if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    for (const char* key : {"model", "data", "out"})
        if (!cfg.contains(key))
            throw InvalidSpecError(std::string("eval config needs '") + key + "'");

    DensityModel model = load_model(cfg["model"].get<std::string>());
    const std::string data_path = cfg["data"].get<std::string>();
    Matrix X = standardized(model, load_data(data_path));
    std::vector<std::string> metrics;
    if (cfg.contains("metrics")) metrics = cfg["metrics"].get<std::vector<std::string>>();
    const std::string model_path = cfg["model"].get<std::string>();
    const std::string family = cfg.value("family", "");

    ScoreFn score = model_score(model);

    std::ostringstream out;
    out << "dataset,model,metric,value,seed,note\n";
    auto emit = [&](const std::string& metric, double value, const std::string& note = "") {
        out << data_path << "," << model_path << "," << metric << ","
            << format_double(value) << "," << seed << "," << note << "\n";
    };

    for (const std::string& metric : metrics) {
        if (metric == "fisher") {
            if (family.empty()) {
                emit(metric, std::numeric_limits<double>::quiet_NaN(),
                     "skipped: true score unavailable for non-synthetic data");
                continue;
            }
            Synthetic2D dist = make_distribution(family);
            std::vector<bool> mask;
            if (dist.bounded) {
                mask.resize(static_cast<std::size_t>(X.rows()));
                for (long a = 0; a < X.rows(); ++a)
                    mask[static_cast<std::size_t>(a)] = dist.support(X.row(a).transpose());
            }
            emit(metric, fisher_divergence(score, dist.score, X, mask));
        } else if (metric == "avg_ll") {
            if (!model.log_Z) {
                emit(metric, std::numeric_limits<double>::quiet_NaN(),
                     "skipped: model has no normalizer");
                continue;
            }
            emit(metric, avg_log_likelihood(model, X));
        } else if (metric == "fssd") {
            FssdResult r = fssd_test(score, X, 5, 1000, derive_seed(seed, 11));
            emit("fssd_statistic", r.statistic);
            emit("fssd_p_value", r.p_value);
        } else if (metric == "wasserstein1") {
            MalaConfig mc;
            mc.n_chains = 4;
            mc.seed = derive_seed(seed, 12);
            if (cfg.contains("mala")) {
                const json& mj = cfg["mala"];
                check_keys(mj, {"step_size", "chain_length", "burn_in", "n_chains"}, "mala");
                mc.step_size = mj.value("step_size", mc.step_size);
                mc.chain_length = mj.value("chain_length", mc.chain_length);
                mc.burn_in = mj.value("burn_in", mc.burn_in);
                mc.n_chains = mj.value("n_chains", mc.n_chains);
            }
            LogDensityTarget target{
                [&model](const Vector& x) { return log_density(model, x, false); }, score};
            Matrix init = X.topRows(std::min<long>(mc.n_chains, X.rows()));
            MalaResult mr = mala_sample(target, init, mc);
            emit(metric, wasserstein1(mr.samples, X, derive_seed(seed, 13), 1000));
        } else {
            throw InvalidSpecError("unknown metric: " + metric);
        }
    }
    write_file(cfg["out"].get<std::string>(), out.str());
    std::cout << "wrote metrics to " << cfg["out"].get<std::string>() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// grid

int cmd_grid(const std::string& config_path) {
    json cfg = parse_config(config_path);
    check_keys(cfg, {"model", "bounds", "resolution", "clip", "out"}, "grid config");
    for (const char* key : {"model", "bounds", "resolution", "out"})
        if (!cfg.contains(key))
            throw InvalidSpecError(std::string("grid config needs '") + key + "'");

    DensityModel model = load_model(cfg["model"].get<std::string>());
    if (model.map.d != 2) throw InvalidSpecError("grid export requires a 2-d model");
    std::vector<double> bounds = cfg["bounds"].get<std::vector<double>>();
    if (bounds.size() != 4)
        throw InvalidSpecError("bounds must be [x1min, x1max, x2min, x2max]");
    const int res = cfg["resolution"].get<int>();
    if (res < 1) throw InvalidSpecError("resolution must be >= 1");
    const double clip = cfg.value("clip", -10.0);
    const bool normalized = model.log_Z.has_value();

    Matrix rows(static_cast<long>(res) * res, 3);
    long r = 0;
    for (int i = 0; i < res; ++i) {
        double x1 = res == 1 ? bounds[0]
                             : bounds[0] + (bounds[1] - bounds[0]) * i / (res - 1.0);
        for (int j = 0; j < res; ++j) {
            double x2 = res == 1 ? bounds[2]
                                 : bounds[2] + (bounds[3] - bounds[2]) * j / (res - 1.0);
            Vector x(2);
            x << x1, x2;
            double v;
            if (model.q0.kind == BaseDensityKind::UniformBox && !model.q0.in_support(x))
                v = clip;
            else
                v = std::max(log_density(model, x, normalized), clip);
            rows.row(r++) << x1, x2, v;
        }
    }
    write_csv(cfg["out"].get<std::string>(), rows, {"x1", "x2", "log_density"});
    std::cout << "wrote " << rows.rows() << " grid rows\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchKey {
    std::string dataset, method, metric;
};

int cmd_bench(const std::string& config_path, std::uint64_t seed) {
    json cfg = parse_config(config_path);
    check_keys(cfg,
               {"suite", "seeds", "n", "n_eval", "M", "m_inducing", "lambda", "sigma",
                "q0", "out", "seed", "normalize_columns"},
               "bench config");
    if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    if (!cfg.contains("suite") || !cfg.contains("out"))
        throw InvalidSpecError("bench config needs 'suite' and 'out'");

    const int n_seeds = cfg.value("seeds", 1);
    const int n = cfg.value("n", 1000);
    const int n_eval = cfg.value("n_eval", 500);
    const int M = cfg.value("M", 100);
    const int m_ind = cfg.value("m_inducing", 100);
    const double lambda = cfg.value("lambda", 1e-3);
    const double sigma = cfg.value("sigma", 0.1);
    BaseDensityKind q0_kind = q0_kind_from_name(cfg.value("q0", "gaussian"));
    const bool normalize_columns = cfg.value("normalize_columns", true);

    struct Row {
        std::string dataset, method, metric;
        double mean, stdev;
        int seeds;
        std::string note;
    };
    std::vector<Row> rows;

    for (const json& pair : cfg["suite"]) {
        check_keys(pair, {"dataset", "method"}, "suite entry");
        const std::string dataset = pair.at("dataset").get<std::string>();
        const std::string method = pair.at("method").get<std::string>();
        std::vector<double> fishers, times;
        std::string err;
        for (int s = 0; s < n_seeds && err.empty(); ++s) {
            try {
                std::uint64_t run_seed = derive_seed(seed, 100 * s + 7);
                Synthetic2D dist = make_distribution(dataset);
                Matrix X = synth_sample(dist, n, run_seed);
                Matrix Xe = synth_sample(dist, n_eval, derive_seed(run_seed, 2));
                const int d = static_cast<int>(X.cols());
                KernelSpec spec;
                spec.lengthscales = Vector::Ones(d);

                ScoreFn score;
                double t0 = now_seconds();
                if (method == "dsm_rff" || method == "sm_rff" || method == "taylor") {
                    double sig = method == "sm_rff" ? 0.0 : sigma;
                    FeatureMap map =
                        sample_feature_map(spec, d, M, derive_seed(run_seed, 3));
                    BaseDensity q0 = fit_q0(q0_kind, X, 2, derive_seed(run_seed, 4));
                    Coefficients coeffs;
                    if (method == "taylor") {
                        coeffs = taylor_dsm_fit(map, X, q0, lambda, sig);
                    } else {
                        FitConfig fc;
                        fc.lambda = lambda;
                        fc.noise = NoiseSpec{sig};
                        coeffs = fit_dsm(build_system_rbf(map, X, fc.noise, q0), fc);
                    }
                    DensityModel model{coeffs, map, q0, std::nullopt};
                    score = model_score(model);
                } else if (method == "nystrom") {
                    NystromModel nm =
                        fit_nystrom(X, spec, std::min(m_ind, n), lambda, NoiseSpec{sigma},
                                    run_seed);
                    score = [nm](const Vector& x) { return nystrom_f_grad(nm, x); };
                } else {
                    throw InvalidSpecError("unknown bench method: " + method);
                }
                times.push_back(now_seconds() - t0);

                std::vector<bool> mask;
                if (dist.bounded) {
                    mask.resize(static_cast<std::size_t>(Xe.rows()));
                    for (long a = 0; a < Xe.rows(); ++a)
                        mask[static_cast<std::size_t>(a)] =
                            dist.support(Xe.row(a).transpose());
                }
                fishers.push_back(fisher_divergence(score, dist.score, Xe, mask));
            } catch (const std::exception& e) {
                err = e.what();
            }
        }
        auto mean_std = [](const std::vector<double>& v) {
            double m = 0.0, sd = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            if (v.size() > 1) {
                for (double x : v) sd += (x - m) * (x - m);
                sd = std::sqrt(sd / (v.size() - 1.0));
            }
            return std::pair<double, double>(m, sd);
        };
        if (!err.empty()) {
            rows.push_back({dataset, method, "error",
                            std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN(), n_seeds, err});
            continue;
        }
        auto [fm, fs] = mean_std(fishers);
        auto [tm, ts] = mean_std(times);
        rows.push_back({dataset, method, "fisher", fm, fs, n_seeds, ""});
        rows.push_back({dataset, method, "wall_time_seconds", tm, ts, n_seeds, ""});
    }

    std::ostringstream out;
    out << "dataset,method,metric,mean,std,seeds,normalized_mean,note\n";
    for (const Row& row : rows) {
        double norm = std::numeric_limits<double>::quiet_NaN();
        if (normalize_columns) {
            double best = 0.0;
            for (const Row& other : rows)
                if (other.dataset == row.dataset && other.metric == row.metric)
                    best = std::max(best, std::abs(other.mean));
            if (best > 0.0 && std::isfinite(row.mean)) norm = row.mean / best;
        }
        out << row.dataset << "," << row.method << "," << row.metric << ","
            << format_double(row.mean) << "," << format_double(row.stdev) << ","
            << row.seeds << "," << format_double(norm) << "," << row.note << "\n";
    }
    write_file(cfg["out"].get<std::string>(), out.str());
    std::cout << "wrote " << rows.size() << " result rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel denoising score matching toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    bool reproducible = false;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker threads (0 = library default)");
    app.add_flag("--reproducible", reproducible, "single-threaded deterministic mode");
    app.add_option("--seed", seed, "top-level seed");

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
    std::string family, out_path, config_path;
    int n = 1000;
    gen->add_option("--family", family, "distribution family")->required();
    gen->add_option("--n", n, "number of samples");
    gen->add_option("--out", out_path, "output CSV path")->required();

    auto* fit = app.add_subcommand("fit", "fit a model from a config");
    fit->add_option("--config", config_path, "config JSON path")->required();
    auto* eval = app.add_subcommand("eval", "evaluate a model");
    eval->add_option("--config", config_path, "config JSON path")->required();
    auto* grid = app.add_subcommand("grid", "export a log-density grid");
    grid->add_option("--config", config_path, "config JSON path")->required();
    auto* bench = app.add_subcommand("bench", "run a benchmark suite");
    bench->add_option("--config", config_path, "config JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    if (threads == 0) {
        if (const char* env = std::getenv("KDSM_THREADS")) threads = std::atoi(env);
    }
    runtime().threads = threads;
    runtime().reproducible = reproducible;

    try {
        if (gen->parsed()) return cmd_gen(family, n, seed, out_path);
        if (fit->parsed()) return cmd_fit(config_path, seed);
        if (eval->parsed()) return cmd_eval(config_path, seed);
        if (grid->parsed()) return cmd_grid(config_path);
        if (bench->parsed()) return cmd_bench(config_path, seed);
    } catch (const InvalidSpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
