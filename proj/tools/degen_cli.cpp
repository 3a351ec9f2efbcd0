#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "degen/io.hpp"
#include "degen/zoo.hpp"

namespace fs = std::filesystem;
using degen::json;

namespace {

constexpr const char* kTool = "degen";
constexpr const char* kVersion = "0.1.0";
constexpr std::uint64_t kDefaultSeed = 12345;

fs::path resolve_out(const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p;
    if (const char* dir = std::getenv("DEGEN_OUT_DIR")) return fs::path(dir) / p;
    return p;
}

// every report passes the shipped schema before it reaches disk
void emit_report(const std::string& path, const std::string& command, std::uint64_t seed,
                 json config, json results, bool timings, double wall_seconds) {
    json report;
    report["tool"] = kTool;
    report["version"] = kVersion;
    report["command"] = command;
    report["seed"] = seed;
    report["config"] = std::move(config);
    report["results"] = std::move(results);
    if (timings) report["timings"] = {{"wall_seconds", wall_seconds}};
    auto violations = degen::validate_report(report);
    if (!violations.empty())
        throw std::runtime_error("internal error: report fails schema: " + violations.front());
    degen::write_json(resolve_out(path), report);
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

std::string underscored(std::string s) {
    for (char& c : s)
        if (c == '-') c = '_';
    return s;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// ---- subcommand payloads ----

struct ZooArgs {
    std::string kind, widths, blocks, mediators, activation = "relu";
    std::uint64_t seed = kDefaultSeed;
    int n = 64, data_rank = 1;
    std::vector<std::string> outputs;
    std::string report;
    bool timings = false;
};

int run_zoo(const ZooArgs& a) {
    Timer timer;
    degen::ZooSpec spec;
    spec.kind = degen::zoo_kind_from_name(underscored(a.kind));
    spec.widths = parse_int_list(a.widths);
    spec.seed = a.seed;
    spec.n_datapoints = a.n;
    spec.hidden_activation = degen::activation_from_name(underscored(a.activation));
    spec.data_rank = a.data_rank;
    if (!a.blocks.empty()) spec.block_sizes = parse_int_list(a.blocks);
    if (!a.mediators.empty()) spec.mediator_weights = parse_double_list(a.mediators);
    degen::ZooResult zoo = degen::generate_network(spec);

    if (a.outputs.size() != 2)
        throw CLI::ValidationError("-o", "zoo needs two outputs: model and dataset");
    degen::save_model(resolve_out(a.outputs[0]), zoo.net);
    degen::save_dataset(resolve_out(a.outputs[1]), zoo.data);

    if (!a.report.empty()) {
        json config = {{"kind", degen::zoo_kind_name(spec.kind)}, {"widths", spec.widths},
                       {"seed", spec.seed},                       {"n", spec.n_datapoints},
                       {"activation", a.activation},             {"blocks", spec.block_sizes},
                       {"mediators", spec.mediator_weights},     {"data_rank", spec.data_rank}};
        json results;
        results["model"] = a.outputs[0];
        results["dataset"] = a.outputs[1];
        json certificate = json::object();
        if (zoo.certificate.blocks) certificate["blocks"] = *zoo.certificate.blocks;
        if (zoo.certificate.module_ids) certificate["module_ids"] = *zoo.certificate.module_ids;
        json mediators = json::array();
        for (const auto& [layer, row, col, weight] : zoo.certificate.mediators)
            mediators.push_back(
                {{"layer", layer}, {"row", row}, {"col", col}, {"weight", weight}});
        if (!mediators.empty()) certificate["mediators"] = std::move(mediators);
        results["certificate"] = std::move(certificate);
        emit_report(a.report, "zoo", a.seed, config, results, a.timings, timer.seconds());
    }
    return 0;
}

struct SpectraArgs {
    std::string model, data, kind = "all", report = "spectra.json";
    int layer = -1;
    double rank_tol = degen::kDefaultRankTol;
    bool timings = false;
};

int run_spectra(const SpectraArgs& a) {
    Timer timer;
    degen::Network net = degen::load_model(a.model);
    degen::Dataset data = degen::load_dataset(a.data);
    degen::ForwardTrace trace = degen::forward_trace(net, data);
    const int L = net.depth();

    auto one = [&](int layer, degen::GramKind kind) {
        degen::GramMatrix gram =
            kind == degen::GramKind::Activation
                ? degen::activation_gram(trace, layer)
                : degen::jacobian_gram(net, trace, layer, kind, true);
        return degen::spectrum_to_json(degen::spectrum(gram, a.rank_tol), layer, kind);
    };

    std::vector<std::pair<int, degen::GramKind>> requests;
    auto add_kind = [&](degen::GramKind kind) {
        const int last = kind == degen::GramKind::Activation ? L : L - 1;
        if (a.layer >= 0) {
            if (a.layer > last) throw CLI::ValidationError("--layer", "layer out of range");
            requests.push_back({a.layer, kind});
        } else {
            for (int l = 0; l <= last; ++l) requests.push_back({l, kind});
        }
    };
    if (a.kind == "all" || a.kind == "G") add_kind(degen::GramKind::Activation);
    if (a.kind == "all" || a.kind == "K") add_kind(degen::GramKind::JacobianK);
    if (a.kind == "all" || a.kind == "M") add_kind(degen::GramKind::JacobianM);
    if (requests.empty()) throw CLI::ValidationError("--kind", "kind must be G, K, M, or all");

    json spectra = json::array();
    for (auto [layer, kind] : requests) spectra.push_back(one(layer, kind));

    json config = {{"model", a.model},
                   {"data", a.data},
                   {"kind", a.kind},
                   {"layer", a.layer},
                   {"rank_tol", a.rank_tol}};
    emit_report(a.report, "spectra", kDefaultSeed, config,
                json{{"spectra", spectra}}, a.timings, timer.seconds());
    return 0;
}

struct HessianArgs {
    std::string model, data, report = "hessian.json", dump;
    double rank_tol = degen::kDefaultRankTol;
    bool kfac = false, timings = false;
};

int run_hessian(const HessianArgs& a) {
    Timer timer;
    degen::Network net = degen::load_model(a.model);
    degen::Dataset data = degen::load_dataset(a.data);

    degen::HessianResult hess = degen::exact_hessian(net, data);
    degen::Spectrum sp = degen::spectrum(hess.matrix, a.rank_tol);
    degen::LedgerTols ltols;
    ltols.rank_tol = a.rank_tol;
    degen::DegeneracyLedger ledger = degen::degeneracy_ledger(net, data, ltols);

    json results;
    results["parameters"] = net.parameter_count();
    results["nullity"] = degen::hessian_nullity(hess.matrix, a.rank_tol);
    results["eigenvalues"] = std::vector<double>(
        sp.eigenvalues.data(), sp.eigenvalues.data() + sp.eigenvalues.size());
    results["ledger"] = degen::ledger_to_json(ledger);
    if (a.kfac) {
        json blocks = json::array();
        for (const degen::Matrix& b : degen::kfac_hessian(net, data))
            blocks.push_back({{"rows", b.rows()}, {"cols", b.cols()}});
        results["kfac_blocks"] = std::move(blocks);
    }
    if (!a.dump.empty()) {
        degen::save_matrix_binary(resolve_out(a.dump), hess.matrix);
        results["dump"] = a.dump;
    }

    json config = {{"model", a.model}, {"data", a.data}, {"rank_tol", a.rank_tol},
                   {"kfac", a.kfac},   {"dump", a.dump}};
    emit_report(a.report, "hessian", kDefaultSeed, config, results, a.timings, timer.seconds());
    return 0;
}

struct SyncArgs {
    std::string model, data, mode = "exact", report = "sync.json";
    int layer = -1;
    double tol = -1.0;
    double rank_tol = degen::kDefaultRankTol;
    bool timings = false;
};

int run_sync(const SyncArgs& a) {
    Timer timer;
    degen::Network net = degen::load_model(a.model);
    degen::Dataset data = degen::load_dataset(a.data);
    degen::ForwardTrace trace = degen::forward_trace(net, data);
    degen::SyncMode mode =
        a.mode == "approx" ? degen::SyncMode::Approx : degen::SyncMode::Exact;

    std::vector<int> layers;
    if (a.layer >= 1)
        layers.push_back(a.layer);
    else
        for (int l = 1; l < net.depth(); ++l) layers.push_back(l);

    json partitions = json::array();
    for (int l : layers) {
        double tol = a.tol >= 0.0 ? a.tol : degen::default_sync_tol(trace, l);
        degen::FiringPattern fp = degen::firing_patterns(net, trace, l);
        degen::SyncPartition part = degen::detect_blocks(fp, trace, mode, tol, a.rank_tol);
        partitions.push_back(degen::sync_partition_to_json(part));
    }

    json config = {{"model", a.model}, {"data", a.data},         {"mode", a.mode},
                   {"layer", a.layer}, {"tol", a.tol},           {"rank_tol", a.rank_tol}};
    emit_report(a.report, "sync", kDefaultSeed, config, json{{"partitions", partitions}},
                a.timings, timer.seconds());
    return 0;
}

struct SparsifyArgs {
    std::string model, data, model_out;
    std::vector<std::string> outputs;  // graph.dot report.json
    double rank_tol = degen::kDefaultRankTol, dep_tol = 1e-6;
    bool timings = false;
};

int run_sparsify(const SparsifyArgs& a) {
    Timer timer;
    degen::Network net = degen::load_model(a.model);
    degen::Dataset data = degen::load_dataset(a.data);
    degen::SparsifyTols tols;
    tols.rank_tol = a.rank_tol;
    tols.dep_tol = a.dep_tol;
    auto [sparsified, graph] = degen::sparsify_network(net, data, tols);

    if (a.outputs.size() != 2)
        throw CLI::ValidationError("-o", "sparsify needs two outputs: graph.dot and report.json");
    degen::write_text(resolve_out(a.outputs[0]), degen::graph_to_dot(graph));
    if (!a.model_out.empty()) degen::save_model(resolve_out(a.model_out), sparsified.net);

    json results;
    results["graph"] = degen::graph_to_json(graph);
    results["zeros_activation"] = sparsified.zeros_activation;
    results["zeros_sync"] = sparsified.zeros_sync;
    results["zeros_total"] = graph.total_structural_zeros();
    results["rolled_back_blocks"] = sparsified.rolled_back_blocks;
    results["max_output_deviation"] = sparsified.max_output_deviation;

    json config = {{"model", a.model},       {"data", a.data},
                   {"rank_tol", a.rank_tol}, {"dep_tol", a.dep_tol},
                   {"model_out", a.model_out}};
    emit_report(a.outputs[1], "sparsify", kDefaultSeed, config, results, a.timings,
                timer.seconds());
    return 0;
}

struct LlcArgs {
    std::string landscape, model, data, out, report, svg, curve_json;
    double c = 0.0, eps_min = 1e-8, eps_max = 1e-2, eps = -1.0;
    double half_width = 1.0, rel = 0.1;
    long samples = 200000, min_hits = 30;
    int ppd = 5, window = 7;
    std::uint64_t seed = kDefaultSeed;
    bool timings = false;
};

int run_llc(const LlcArgs& a) {
    Timer timer;
    degen::LossLandscape landscape;
    degen::Region region;
    if (!a.landscape.empty()) {
        std::string name = underscored(a.landscape);
        if (name == "quartic") name = "quartic_toy";
        landscape = degen::analytic_landscape(name, a.c);
        region.center = degen::Vector::Zero(landscape.dimension);
        region.half_widths = a.half_width * degen::Vector::Ones(landscape.dimension);
    } else {
        if (a.model.empty() || a.data.empty())
            throw CLI::ValidationError("llc",
                                       "provide --landscape or a model and dataset");
        degen::Network net = degen::load_model(a.model);
        degen::Dataset dataset = degen::load_dataset(a.data);
        landscape = degen::behavioral_landscape(net, dataset);
        region = degen::default_region(landscape.center, a.rel);
    }

    auto grid = degen::log_grid(a.eps_min, a.eps_max, a.ppd);
    degen::VolumeCurve volume =
        degen::estimate_volume(landscape, region, grid, a.samples, a.seed);
    degen::LambdaCurve lambda = degen::lambda_curve(volume, a.window, a.min_hits);

    if (!a.out.empty())
        degen::write_text(resolve_out(a.out), degen::curves_to_csv(volume, lambda));
    if (!a.svg.empty())
        degen::write_text(resolve_out(a.svg), degen::lambda_curve_to_svg(lambda));
    if (!a.curve_json.empty())
        degen::write_json(resolve_out(a.curve_json), degen::curves_to_json(volume, lambda));

    if (!a.report.empty()) {
        json results;
        results["curves"] = degen::curves_to_json(volume, lambda);
        if (a.eps > 0.0) {
            degen::SamplerCfg cfg;
            cfg.n_samples = a.samples;
            cfg.seed = a.seed;
            cfg.window = a.window;
            cfg.min_hits = a.min_hits;
            cfg.points_per_decade = a.ppd;
            degen::EffectiveParams ep = degen::effective_params(landscape, region, a.eps, cfg);
            results["effective_params"] = {{"lambda_hat", ep.lambda_hat},
                                           {"n_eff", ep.n_eff},
                                           {"n_free", ep.n_free},
                                           {"N", ep.N},
                                           {"eps", ep.eps_used}};
        }
        json config = {{"landscape", a.landscape}, {"c", a.c},
                       {"model", a.model},         {"data", a.data},
                       {"eps_min", a.eps_min},     {"eps_max", a.eps_max},
                       {"eps", a.eps},             {"samples", a.samples},
                       {"ppd", a.ppd},             {"window", a.window},
                       {"min_hits", a.min_hits},   {"half_width", a.half_width},
                       {"rel", a.rel},             {"seed", a.seed}};
        emit_report(a.report, "llc", a.seed, config, results, a.timings, timer.seconds());
    }
    return 0;
}

struct BasisArgs {
    std::string model, data, mode = "local", report = "basis.json";
    int layer = -1;
    double rank_tol = degen::kDefaultRankTol;
    bool timings = false;
};

int run_basis(const BasisArgs& a) {
    Timer timer;
    degen::Network net = degen::load_model(a.model);
    degen::Dataset data = degen::load_dataset(a.data);
    degen::IBasisMode mode =
        a.mode == "global" ? degen::IBasisMode::Global : degen::IBasisMode::Local;
    auto bases = degen::interaction_basis_all(net, data, mode, a.rank_tol);
    degen::TransformReport transform = degen::transform_network(net, bases, data);

    json results;
    json basis_json = json::array();
    if (a.layer >= 0) {
        if (a.layer > net.depth()) throw CLI::ValidationError("--layer", "layer out of range");
        basis_json.push_back(degen::basis_to_json(bases[a.layer]));
    } else {
        for (const auto& b : bases) basis_json.push_back(degen::basis_to_json(b));
    }
    results["bases"] = std::move(basis_json);
    results["off_diagonal_ratio"] = transform.off_diagonal_ratio;
    results["max_off_diagonal_ratio"] = transform.max_off_diagonal_ratio;
    json devs = json::array();
    for (double d : transform.fhat_deviation)
        devs.push_back(std::isfinite(d) ? json(d) : json(nullptr));
    results["fhat_deviation"] = std::move(devs);

    json config = {{"model", a.model}, {"data", a.data},
                   {"mode", a.mode},   {"layer", a.layer},
                   {"rank_tol", a.rank_tol}};
    emit_report(a.report, "basis", kDefaultSeed, config, results, a.timings, timer.seconds());
    return 0;
}

struct PartitionArgs {
    std::string graph, out = "partition.json", report;
    int k = 2;
    double eps = 1e-4;
    std::uint64_t seed = kDefaultSeed;
    bool timings = false;
};

int run_partition(const PartitionArgs& a) {
    Timer timer;
    degen::InteractionGraph graph = degen::load_graph(a.graph);
    degen::PartitionResult result = degen::find_partition(graph, a.k, a.eps, a.seed);
    degen::write_json(resolve_out(a.out), degen::partition_to_json(graph, result));

    if (!a.report.empty()) {
        json config = {{"graph", a.graph}, {"k", a.k}, {"eps", a.eps}, {"seed", a.seed}};
        json results = {{"partition", degen::partition_to_json(graph, result)}};
        emit_report(a.report, "partition", a.seed, config, results, a.timings, timer.seconds());
    }
    return 0;
}

int run_validate(const std::string& path) {
    auto violations = degen::validate_report_file(path);
    if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"degeneracy analysis toolkit"};
    app.require_subcommand(1);

    ZooArgs zoo;
    auto* zoo_cmd = app.add_subcommand("zoo", "generate a test network and dataset");
    zoo_cmd->add_option("--kind", zoo.kind)->required();
    zoo_cmd->add_option("--widths", zoo.widths)->required();
    zoo_cmd->add_option("--blocks", zoo.blocks);
    zoo_cmd->add_option("--mediators", zoo.mediators);
    zoo_cmd->add_option("--activation", zoo.activation);
    zoo_cmd->add_option("--seed", zoo.seed);
    zoo_cmd->add_option("--n", zoo.n);
    zoo_cmd->add_option("--data-rank", zoo.data_rank);
    zoo_cmd->add_option("-o,--out", zoo.outputs)->expected(2);
    zoo_cmd->add_option("--report", zoo.report);
    zoo_cmd->add_flag("--timings", zoo.timings);

    SpectraArgs spectra;
    auto* spectra_cmd = app.add_subcommand("spectra", "Gram matrix eigenspectra");
    spectra_cmd->add_option("model", spectra.model)->required();
    spectra_cmd->add_option("data", spectra.data)->required();
    spectra_cmd->add_option("--kind", spectra.kind);
    spectra_cmd->add_option("--layer", spectra.layer);
    spectra_cmd->add_option("--rank-tol", spectra.rank_tol);
    spectra_cmd->add_option("-o,--out", spectra.report);
    spectra_cmd->add_flag("--timings", spectra.timings);

    HessianArgs hessian;
    auto* hessian_cmd = app.add_subcommand("hessian", "behavioral-loss Hessian analysis");
    hessian_cmd->add_option("model", hessian.model)->required();
    hessian_cmd->add_option("data", hessian.data)->required();
    hessian_cmd->add_option("--rank-tol", hessian.rank_tol);
    hessian_cmd->add_option("--dump", hessian.dump);
    hessian_cmd->add_flag("--kfac", hessian.kfac);
    hessian_cmd->add_option("-o,--out", hessian.report);
    hessian_cmd->add_flag("--timings", hessian.timings);

    SyncArgs sync;
    auto* sync_cmd = app.add_subcommand("sync", "synchronized firing-pattern blocks");
    sync_cmd->add_option("model", sync.model)->required();
    sync_cmd->add_option("data", sync.data)->required();
    sync_cmd->add_option("--layer", sync.layer);
    sync_cmd->add_option("--mode", sync.mode);
    sync_cmd->add_option("--tol", sync.tol);
    sync_cmd->add_option("--rank-tol", sync.rank_tol);
    sync_cmd->add_option("-o,--out", sync.report);
    sync_cmd->add_flag("--timings", sync.timings);

    SparsifyArgs sparsify;
    auto* sparsify_cmd = app.add_subcommand("sparsify", "structural-zero reparameterization");
    sparsify_cmd->add_option("model", sparsify.model)->required();
    sparsify_cmd->add_option("data", sparsify.data)->required();
    sparsify_cmd->add_option("--rank-tol", sparsify.rank_tol);
    sparsify_cmd->add_option("--dep-tol", sparsify.dep_tol);
    sparsify_cmd->add_option("--model-out", sparsify.model_out);
    sparsify_cmd->add_option("-o,--out", sparsify.outputs)->expected(2);
    sparsify_cmd->add_flag("--timings", sparsify.timings);

    LlcArgs llc;
    auto* llc_cmd = app.add_subcommand("llc", "volume scaling and learning coefficient");
    llc_cmd->add_option("model", llc.model);
    llc_cmd->add_option("data", llc.data);
    llc_cmd->add_option("--landscape", llc.landscape);
    llc_cmd->add_option("--c", llc.c);
    llc_cmd->add_option("--eps-min", llc.eps_min);
    llc_cmd->add_option("--eps-max", llc.eps_max);
    llc_cmd->add_option("--eps", llc.eps);
    llc_cmd->add_option("--samples", llc.samples);
    llc_cmd->add_option("--ppd", llc.ppd);
    llc_cmd->add_option("--window", llc.window);
    llc_cmd->add_option("--min-hits", llc.min_hits);
    llc_cmd->add_option("--half-width", llc.half_width);
    llc_cmd->add_option("--rel", llc.rel);
    llc_cmd->add_option("--seed", llc.seed);
    llc_cmd->add_option("-o,--out", llc.out);
    llc_cmd->add_option("--report", llc.report);
    llc_cmd->add_option("--svg", llc.svg);
    llc_cmd->add_option("--json", llc.curve_json);
    llc_cmd->add_flag("--timings", llc.timings);

    BasisArgs basis;
    auto* basis_cmd = app.add_subcommand("basis", "interaction basis per layer");
    basis_cmd->add_option("model", basis.model)->required();
    basis_cmd->add_option("data", basis.data)->required();
    basis_cmd->add_option("--mode", basis.mode);
    basis_cmd->add_option("--layer", basis.layer);
    basis_cmd->add_option("--rank-tol", basis.rank_tol);
    basis_cmd->add_option("-o,--out", basis.report);
    basis_cmd->add_flag("--timings", basis.timings);

    PartitionArgs partition;
    auto* partition_cmd = app.add_subcommand("partition", "interaction-graph module search");
    partition_cmd->add_option("graph", partition.graph)->required();
    partition_cmd->add_option("--k", partition.k);
    partition_cmd->add_option("--eps", partition.eps);
    partition_cmd->add_option("--seed", partition.seed);
    partition_cmd->add_option("-o,--out", partition.out);
    partition_cmd->add_option("--report", partition.report);
    partition_cmd->add_flag("--timings", partition.timings);

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "validate a report against the schema");
    report_cmd->add_option("path", report_path)->required();

    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (0 = default)");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) Eigen::setNbThreads(threads);

    try {
        if (zoo_cmd->parsed()) return run_zoo(zoo);
        if (spectra_cmd->parsed()) return run_spectra(spectra);
        if (hessian_cmd->parsed()) return run_hessian(hessian);
        if (sync_cmd->parsed()) return run_sync(sync);
        if (sparsify_cmd->parsed()) return run_sparsify(sparsify);
        if (llc_cmd->parsed()) return run_llc(llc);
        if (basis_cmd->parsed()) return run_basis(basis);
        if (partition_cmd->parsed()) return run_partition(partition);
        if (report_cmd->parsed()) return run_validate(report_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
