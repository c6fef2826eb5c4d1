#include "bpinn/genome.hpp"

#include <json.hpp>
#include <stdexcept>

#include "bpinn/rng.hpp"

namespace bpinn {

Genome make_genome(int n_input, int n_neuron_per_block, bool with_row_weight) {
  Genome g;
  g.n_input = n_input;
  g.n_neuron_per_block = n_neuron_per_block;
  g.means.assign(g.n_dist(), 0.0);
  g.spreads.assign(g.n_dist(), 0.0);
  g.lambda_raw = 0.0;
  if (with_row_weight) g.lambda_pde_raw = 0.0;
  return g;
}

Eigen::VectorXd genome_to_vector(const Genome& g) {
  const int nd = g.n_dist();
  Eigen::VectorXd v(g.search_dim());
  for (int i = 0; i < nd; ++i) v[i] = g.means[i];
  for (int i = 0; i < nd; ++i) v[nd + i] = g.spreads[i];
  v[2 * nd] = g.lambda_raw;
  if (g.lambda_pde_raw) v[2 * nd + 1] = *g.lambda_pde_raw;
  return v;
}

Genome genome_from_vector(const Eigen::VectorXd& v, int n_input,
                          int n_neuron_per_block, bool with_row_weight) {
  Genome g = make_genome(n_input, n_neuron_per_block, with_row_weight);
  if (v.size() != g.search_dim())
    throw std::invalid_argument("genome vector has dimension " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(g.search_dim()));
  const int nd = g.n_dist();
  for (int i = 0; i < nd; ++i) g.means[i] = v[i];
  for (int i = 0; i < nd; ++i) g.spreads[i] = v[nd + i];
  g.lambda_raw = v[2 * nd];
  if (with_row_weight) g.lambda_pde_raw = v[2 * nd + 1];
  return g;
}

HiddenLayer sample_hidden_layer(const Genome& g, std::uint64_t seed) {
  if ((int)g.means.size() != g.n_dist() || (int)g.spreads.size() != g.n_dist())
    throw std::invalid_argument(
        "genome has " + std::to_string(g.means.size()) + " mean slots, expected " +
        std::to_string(g.n_dist()));
  HiddenLayer layer;
  layer.n_input = g.n_input;
  layer.n_neuron_per_block = g.n_neuron_per_block;
  layer.weights.resize(layer.n_total(), g.n_input);
  layer.biases.resize(layer.n_total());
  for (int b = 0; b < kNumBlocks; ++b) {
    // One stream per block so a block's draws do not depend on the others.
    Rng rng(stream_key(seed, 0x5A17u, b));
    const bool normal = block_is_normal(b);
    for (int j = 0; j < g.n_neuron_per_block; ++j) {
      const int row = b * g.n_neuron_per_block + j;
      for (int d = 0; d <= g.n_input; ++d) {
        const double raw = normal ? rng.normal() : rng.uniform(-1.0, 1.0);
        const int s = g.slot(b, d);
        const double v = raw * std::abs(g.spreads[s]) + g.means[s];
        if (d < g.n_input)
          layer.weights(row, d) = v;
        else
          layer.biases[row] = v;
      }
    }
  }
  return layer;
}

std::string serialize_genome(const Genome& g, int problem_id) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["problem_id"] = problem_id;
  j["n_input"] = g.n_input;
  j["n_neuron_per_block"] = g.n_neuron_per_block;
  j["means"] = g.means;
  j["spreads"] = g.spreads;
  j["lambda_raw"] = g.lambda_raw;
  if (g.lambda_pde_raw) j["lambda_pde_raw"] = *g.lambda_pde_raw;
  return j.dump(2) + "\n";
}

GenomeFile deserialize_genome(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("genome json: ") + e.what());
  }
  for (const char* field :
       {"schema_version", "problem_id", "n_input", "n_neuron_per_block",
        "means", "spreads", "lambda_raw"}) {
    if (!j.contains(field))
      throw std::runtime_error(std::string("genome json: missing field '") +
                               field + "'");
  }
  if (j["schema_version"].get<int>() != 1)
    throw std::runtime_error("genome json: unsupported schema_version");
  GenomeFile f;
  f.problem_id = j["problem_id"].get<int>();
  Genome& g = f.genome;
  g.n_input = j["n_input"].get<int>();
  g.n_neuron_per_block = j["n_neuron_per_block"].get<int>();
  g.means = j["means"].get<std::vector<double>>();
  g.spreads = j["spreads"].get<std::vector<double>>();
  g.lambda_raw = j["lambda_raw"].get<double>();
  if (j.contains("lambda_pde_raw"))
    g.lambda_pde_raw = j["lambda_pde_raw"].get<double>();
  if ((int)g.means.size() != g.n_dist() || (int)g.spreads.size() != g.n_dist())
    throw std::runtime_error(
        "genome json: means/spreads length " + std::to_string(g.means.size()) +
        " inconsistent with n_input=" + std::to_string(g.n_input) +
        " (expected " + std::to_string(g.n_dist()) + ")");
  return f;
}

}  // namespace bpinn
