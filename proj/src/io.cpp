#include "degen/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace degen {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_rows_to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json matrix_flat_to_json(const Matrix& m) {
    json flat = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    return flat;
}

}  // namespace

// ---- model ----

json model_to_json(const Network& net) {
    json j;
    j["input_dim"] = net.input_dim();
    json layers = json::array();
    for (const Layer& layer : net.layers()) {
        json lj;
        lj["rows"] = layer.out_dim();
        lj["cols"] = static_cast<int>(layer.weights.cols());
        lj["activation"] = activation_name(layer.activation);
        if (layer.activation == Activation::LeakyReLU) lj["leak"] = layer.leak;
        lj["weights"] = matrix_flat_to_json(layer.weights);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

Network model_from_json(const json& j) {
    if (!j.contains("input_dim") || !j.contains("layers"))
        throw std::invalid_argument("model JSON needs input_dim and layers");
    std::vector<Layer> layers;
    for (const json& lj : j.at("layers")) {
        Layer layer;
        const int rows = lj.at("rows").get<int>();
        const int cols = lj.at("cols").get<int>();
        layer.activation = activation_from_name(lj.at("activation").get<std::string>());
        if (lj.contains("leak")) layer.leak = lj.at("leak").get<double>();
        const auto& flat = lj.at("weights");
        if (static_cast<int>(flat.size()) != rows * cols)
            throw std::invalid_argument("weight array length does not match rows * cols");
        layer.weights.resize(rows, cols);
        int pos = 0;
        for (int i = 0; i < rows; ++i)
            for (int c = 0; c < cols; ++c) layer.weights(i, c) = flat[pos++].get<double>();
        layers.push_back(std::move(layer));
    }
    Network net(j.at("input_dim").get<int>(), std::move(layers));
    net.validate();
    return net;
}

void save_model(const fs::path& path, const Network& net) { write_json(path, model_to_json(net)); }

Network load_model(const fs::path& path) { return model_from_json(read_json(path)); }

// ---- dataset ----

json dataset_to_json(const Dataset& data) { return matrix_rows_to_json(data.inputs); }

Dataset dataset_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw std::invalid_argument("dataset JSON must be a non-empty array of rows");
    const int n = static_cast<int>(j.size());
    const int d = static_cast<int>(j.front().size());
    Dataset data;
    data.inputs.resize(n, d);
    for (int x = 0; x < n; ++x) {
        const json& row = j[x];
        if (static_cast<int>(row.size()) != d)
            throw std::invalid_argument("ragged dataset rows");
        for (int c = 0; c < d; ++c) data.inputs(x, c) = row[c].get<double>();
    }
    data.validate();
    return data;
}

namespace {

Dataset dataset_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("empty CSV dataset");
    Dataset data;
    data.inputs.resize(rows.size(), rows.front().size());
    for (size_t x = 0; x < rows.size(); ++x) {
        if (rows[x].size() != rows.front().size())
            throw std::invalid_argument("ragged CSV rows");
        for (size_t c = 0; c < rows[x].size(); ++c)
            data.inputs(static_cast<int>(x), static_cast<int>(c)) = rows[x][c];
    }
    data.validate();
    return data;
}

std::string dataset_to_csv(const Dataset& data) {
    std::string out;
    for (int x = 0; x < data.inputs.rows(); ++x) {
        for (int c = 0; c < data.inputs.cols(); ++c) {
            if (c) out += ',';
            out += format_double(data.inputs(x, c));
        }
        out += '\n';
    }
    return out;
}

bool is_csv(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".csv";
}

}  // namespace

void save_dataset(const fs::path& path, const Dataset& data) {
    if (is_csv(path))
        write_text(path, dataset_to_csv(data));
    else
        write_json(path, dataset_to_json(data));
}

Dataset load_dataset(const fs::path& path) {
    if (is_csv(path)) return dataset_from_csv(read_text(path));
    return dataset_from_json(read_json(path));
}

// ---- analysis exports ----

json spectrum_to_json(const Spectrum& sp, int layer, GramKind kind) {
    json j;
    j["layer"] = layer;
    j["kind"] = gram_kind_name(kind);
    j["eigenvalues"] = vector_to_json(sp.eigenvalues);
    j["rank"] = sp.numerical_rank;
    j["rank_tol"] = sp.rank_tol;
    return j;
}

json sync_partition_to_json(const SyncPartition& partition) {
    json j;
    j["layer"] = partition.layer;
    j["blocks"] = partition.blocks;
    j["span_dims"] = partition.span_dims;
    j["N_sync"] = sync_degeneracy(partition);
    j["mode"] = partition.mode == SyncMode::Exact ? "exact" : "approx";
    j["tol"] = partition.tol;
    return j;
}

json graph_to_json(const InteractionGraph& graph) {
    json j;
    j["layer_sizes"] = graph.layer_sizes;
    j["nodes"] = graph.node_count();
    json edges = json::array();
    for (const auto& e : graph.edges)
        edges.push_back({{"layer", e.layer}, {"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    j["edges"] = std::move(edges);
    json zeros = json::array();
    for (const auto& z : graph.zeros_by_layer)
        zeros.push_back({{"activation_rank", z.activation_rank}, {"sync", z.sync}});
    j["zeros_by_source"] = std::move(zeros);
    return j;
}

InteractionGraph graph_from_json(const json& j) {
    InteractionGraph graph;
    graph.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const json& e : j.at("edges"))
        graph.edges.push_back({e.at("layer").get<int>(), e.at("from").get<int>(),
                               e.at("to").get<int>(), e.at("weight").get<double>()});
    if (j.contains("zeros_by_source"))
        for (const json& z : j.at("zeros_by_source"))
            graph.zeros_by_layer.push_back(
                {z.at("activation_rank").get<int>(), z.at("sync").get<int>()});
    if (graph.zeros_by_layer.empty() && graph.layer_sizes.size() > 1)
        graph.zeros_by_layer.assign(graph.layer_sizes.size() - 1, {});
    return graph;
}

InteractionGraph graph_from_edge_list(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    InteractionGraph graph;
    bool have_layers = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        if (head == "layers") {
            int s;
            while (ls >> s) graph.layer_sizes.push_back(s);
            have_layers = true;
            continue;
        }
        if (!have_layers)
            throw std::invalid_argument("edge list must start with a 'layers' line");
        InteractionGraph::Edge e;
        e.layer = std::stoi(head);
        if (!(ls >> e.from >> e.to >> e.weight))
            throw std::invalid_argument("malformed edge line: " + line);
        graph.edges.push_back(e);
    }
    if (!have_layers) throw std::invalid_argument("edge list missing 'layers' line");
    graph.zeros_by_layer.assign(graph.layer_sizes.size() - 1, {});
    return graph;
}

InteractionGraph load_graph(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".json") return graph_from_json(read_json(path));
    return graph_from_edge_list(path);
}

std::string graph_to_dot(const InteractionGraph& graph) {
    std::string out = "digraph interactions {\n  rankdir=LR;\n";
    for (size_t l = 0; l < graph.layer_sizes.size(); ++l)
        for (int i = 0; i < graph.layer_sizes[l]; ++i)
            out += "  n" + std::to_string(l) + "_" + std::to_string(i) + ";\n";
    for (const auto& e : graph.edges)
        out += "  n" + std::to_string(e.layer) + "_" + std::to_string(e.from) + " -> n" +
               std::to_string(e.layer + 1) + "_" + std::to_string(e.to) + " [label=\"" +
               format_double(e.weight) + "\"];\n";
    out += "}\n";
    return out;
}

json curves_to_json(const VolumeCurve& volume, const LambdaCurve& lambda) {
    json j;
    j["eps"] = volume.eps;
    j["volume"] = volume.volume;
    j["ci_sigma"] = volume.ci_sigma;
    j["hits"] = volume.hits;
    json lam = json::array();
    for (double v : lambda.lambda)
        lam.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    j["lambda"] = std::move(lam);
    j["n_samples"] = volume.n_samples;
    j["seed"] = volume.seed;
    j["region_volume"] = volume.region_volume;
    j["window"] = lambda.window;
    j["min_hits"] = lambda.min_hits;
    return j;
}

std::string curves_to_csv(const VolumeCurve& volume, const LambdaCurve& lambda) {
    std::string out = "eps,volume,ci_sigma,hits,lambda\n";
    for (size_t i = 0; i < volume.eps.size(); ++i) {
        out += format_double(volume.eps[i]) + "," + format_double(volume.volume[i]) + "," +
               format_double(volume.ci_sigma[i]) + "," + std::to_string(volume.hits[i]) + ",";
        out += std::isfinite(lambda.lambda[i]) ? format_double(lambda.lambda[i]) : "nan";
        out += '\n';
    }
    return out;
}

std::string lambda_curve_to_svg(const LambdaCurve& lambda) {
    const int W = 640, H = 400, pad = 50;
    double xmin = std::log10(lambda.eps.front());
    double xmax = std::log10(lambda.eps.back());
    double ymin = 0.0, ymax = 0.0;
    bool any = false;
    for (double v : lambda.lambda)
        if (std::isfinite(v)) {
            ymin = any ? std::min(ymin, v) : v;
            ymax = any ? std::max(ymax, v) : v;
            any = true;
        }
    if (!any) {
        ymin = 0.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

    auto px = [&](double e) {
        return pad + (std::log10(e) - xmin) / std::max(xmax - xmin, 1e-12) * (W - 2 * pad);
    };
    auto py = [&](double v) { return H - pad - (v - ymin) / (ymax - ymin) * (H - 2 * pad); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
                      "\" height=\"" + std::to_string(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + std::to_string(pad) + "\" y1=\"" + std::to_string(H - pad) +
           "\" x2=\"" + std::to_string(W - pad) + "\" y2=\"" + std::to_string(H - pad) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + std::to_string(pad) + "\" y1=\"" + std::to_string(pad) + "\" x2=\"" +
           std::to_string(pad) + "\" y2=\"" + std::to_string(H - pad) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + std::to_string(W / 2) + "\" y=\"" + std::to_string(H - 10) +
           "\" text-anchor=\"middle\" font-size=\"12\">log10 eps</text>\n";
    svg += "<text x=\"15\" y=\"" + std::to_string(H / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 " +
           std::to_string(H / 2) + ")\">lambda</text>\n";

    std::string points;
    for (size_t i = 0; i < lambda.eps.size(); ++i) {
        if (!std::isfinite(lambda.lambda[i])) {
            if (!points.empty()) {
                svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" "
                       "points=\"" + points + "\"/>\n";
                points.clear();
            }
            continue;
        }
        points += format_double(px(lambda.eps[i])) + "," + format_double(py(lambda.lambda[i])) +
                  " ";
    }
    if (!points.empty())
        svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"" +
               points + "\"/>\n";
    svg += "</svg>\n";
    return svg;
}

json partition_to_json(const InteractionGraph& graph, const PartitionResult& result) {
    int k = 0;
    for (int m : result.mask) k = std::max(k, m + 1);
    std::vector<std::vector<int>> modules(k);
    for (size_t v = 0; v < result.mask.size(); ++v)
        modules[result.mask[v]].push_back(static_cast<int>(v));
    json j;
    j["modules"] = modules;
    j["score"] = result.score.total;
    j["eps"] = result.score.eps;
    json per_edge = json::array();
    for (const auto& [edge, contribution] : result.score.per_edge) {
        const auto& e = graph.edges[edge];
        per_edge.push_back({{"edge", edge},
                            {"layer", e.layer},
                            {"from", e.from},
                            {"to", e.to},
                            {"weight", e.weight},
                            {"contribution", contribution}});
    }
    j["per_edge_contributions"] = std::move(per_edge);
    return j;
}

json basis_to_json(const LayerBasis& basis) {
    json j;
    j["layer"] = basis.layer;
    j["mode"] = ibasis_mode_name(basis.mode);
    j["C"] = matrix_flat_to_json(basis.C);
    j["C_rows"] = static_cast<int>(basis.C.rows());
    j["C_cols"] = static_cast<int>(basis.C.cols());
    j["retained_dim"] = basis.retained;
    j["eigenvalues_G"] = vector_to_json(basis.d_G);
    j["eigenvalues_M"] = vector_to_json(basis.d_M);
    j["pca_fallback"] = basis.pca_fallback;
    return j;
}

json ledger_to_json(const DegeneracyLedger& ledger) {
    json entries = json::array();
    for (const auto& e : ledger.entries)
        entries.push_back({{"layer", e.layer},
                           {"rank_G", e.rank_G},
                           {"rank_K", e.rank_K},
                           {"activation_rank_deficit", e.activation_rank_deficit},
                           {"jacobian_rank_deficit", e.jacobian_rank_deficit},
                           {"activation_contribution", e.activation_contribution},
                           {"jacobian_contribution", e.jacobian_contribution},
                           {"sync_count", e.sync_count},
                           {"sync_diagonal_count", e.sync_diagonal_count},
                           {"nullity_bound", e.nullity_bound}});
    json j;
    j["entries"] = std::move(entries);
    j["predicted_nullity_lower_bound"] = ledger.predicted_nullity_lower_bound;
    j["N"] = ledger.N;
    j["N_free"] = ledger.N_free;
    j["N_eff"] = ledger.N_eff;
    j["sync_total"] = ledger.sync_total;
    return j;
}

void save_matrix_binary(const fs::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    json header = {{"rows", m.rows()},
                   {"cols", m.cols()},
                   {"dtype", "float64"},
                   {"order", "row-major"}};
    write_json(path.string() + ".json", header);
}

Matrix load_matrix_binary(const fs::path& path) {
    json header = read_json(path.string() + ".json");
    const int rows = header.at("rows").get<int>();
    const int cols = header.at("cols").get<int>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(i, j) = v;
        }
    if (!in) throw std::runtime_error("binary matrix file truncated");
    return m;
}

// ---- reports ----

json report_schema() {
    // field -> expected JSON type of a valid report
    return json{{"tool", "string"},   {"version", "string"}, {"command", "string"},
                {"config", "object"}, {"results", "object"}, {"seed", "number"}};
}

std::vector<std::string> validate_report(const json& report) {
    std::vector<std::string> violations;
    if (!report.is_object()) {
        violations.push_back("report root must be a JSON object");
        return violations;
    }
    const json schema = report_schema();
    for (const auto& [field, type] : schema.items()) {
        if (!report.contains(field)) {
            violations.push_back("missing required field: " + field);
            continue;
        }
        const json& value = report.at(field);
        const std::string want = type.get<std::string>();
        bool ok = (want == "string" && value.is_string()) ||
                  (want == "object" && value.is_object()) ||
                  (want == "number" && value.is_number());
        if (!ok) violations.push_back("field has wrong type: " + field + " (want " + want + ")");
    }
    return violations;
}

std::vector<std::string> validate_report_file(const fs::path& path) {
    return validate_report(read_json(path));
}

// ---- plumbing ----

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::string text = read_text(path);
    return json::parse(text);
}

}  // namespace degen
