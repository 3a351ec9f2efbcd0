#pragma once

#include <filesystem>

#include "degen/ibasis.hpp"
#include "degen/modularity.hpp"
#include "degen/volume.hpp"
#include "json.hpp"

namespace degen {

using json = nlohmann::json;

/// Decimal serialization with 17 significant digits (exact fp64 round-trip).
std::string format_double(double v);

// ---- model ----
json model_to_json(const Network& net);
Network model_from_json(const json& j);
void save_model(const std::filesystem::path& path, const Network& net);
Network load_model(const std::filesystem::path& path);

// ---- dataset: JSON array-of-rows or CSV, one row per datapoint ----
json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const json& j);
void save_dataset(const std::filesystem::path& path, const Dataset& data);  // by extension
Dataset load_dataset(const std::filesystem::path& path);

// ---- analysis exports ----
json spectrum_to_json(const Spectrum& sp, int layer, GramKind kind);
json sync_partition_to_json(const SyncPartition& partition);

json graph_to_json(const InteractionGraph& graph);
InteractionGraph graph_from_json(const json& j);
/// Edge list: first line "layers s0 s1 ..."; then "layer from to weight".
InteractionGraph graph_from_edge_list(const std::filesystem::path& path);
InteractionGraph load_graph(const std::filesystem::path& path);  // by extension
std::string graph_to_dot(const InteractionGraph& graph);

json curves_to_json(const VolumeCurve& volume, const LambdaCurve& lambda);
std::string curves_to_csv(const VolumeCurve& volume, const LambdaCurve& lambda);
/// Minimal line chart of lambda-hat against log10(eps).
std::string lambda_curve_to_svg(const LambdaCurve& lambda);

json partition_to_json(const InteractionGraph& graph, const PartitionResult& result);
json basis_to_json(const LayerBasis& basis);
json ledger_to_json(const DegeneracyLedger& ledger);

/// Raw row-major fp64 dump plus a JSON shape header at path + ".json".
void save_matrix_binary(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix_binary(const std::filesystem::path& path);

// ---- reports ----
/// Required shape of every CLI report.
json report_schema();
/// Empty when valid; otherwise one message per violation.
std::vector<std::string> validate_report(const json& report);
std::vector<std::string> validate_report_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace degen
