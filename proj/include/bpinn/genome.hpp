#pragma once
#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bpinn {

enum class Activation { Sin, Softplus, Tanh };

inline constexpr int kNumBlocks = 6;
// Blocks 1-3 sample from a normal, 4-6 from U(-1,1); activation order repeats
// (sin, softplus, tanh) within each triple.
inline constexpr std::array<Activation, kNumBlocks> kBlockActivation = {
    Activation::Sin, Activation::Softplus, Activation::Tanh,
    Activation::Sin, Activation::Softplus, Activation::Tanh};
inline bool block_is_normal(int block) { return block < 3; }

// Evolvable hyperparameters: one (mean, spread) pair per block per
// pre-activation slot (each input weight and the bias), plus the raw ridge
// hyperparameter and, for problems that evolve it, the IC/BC row weight.
struct Genome {
  int n_input = 1;
  int n_neuron_per_block = 150;
  std::vector<double> means;    // size n_dist()
  std::vector<double> spreads;  // size n_dist(); sign is ignored at sampling
  double lambda_raw = 0.0;
  std::optional<double> lambda_pde_raw;

  int n_dist() const { return kNumBlocks * (n_input + 1); }
  int search_dim() const { return 2 * n_dist() + 1 + (lambda_pde_raw ? 1 : 0); }
  int n_neuron_total() const { return kNumBlocks * n_neuron_per_block; }
  // index of the (mean, spread) slot for block b, input d (d == n_input: bias)
  int slot(int block, int d) const { return block * (n_input + 1) + d; }

  double effective_lambda() const { return 1e-4 * std::abs(lambda_raw); }
  double row_weight_icbc() const {
    return lambda_pde_raw ? std::abs(*lambda_pde_raw) : 1.0;
  }
};

// Zero-initialized genome of the right shape for a problem.
Genome make_genome(int n_input, int n_neuron_per_block, bool with_row_weight);

// Flat vector layout for the ES: [means | spreads | lambda_raw | lambda_pde_raw?]
Eigen::VectorXd genome_to_vector(const Genome& g);
Genome genome_from_vector(const Eigen::VectorXd& v, int n_input,
                          int n_neuron_per_block, bool with_row_weight);

// Concrete sampled hidden layer; fixed for one lifetime. Rows are block-major:
// block b owns rows [b*n_neuron_per_block, (b+1)*n_neuron_per_block).
struct HiddenLayer {
  int n_input = 1;
  int n_neuron_per_block = 150;
  Eigen::MatrixXd weights;  // n_total x n_input
  Eigen::VectorXd biases;   // n_total

  int n_total() const { return kNumBlocks * n_neuron_per_block; }
  Activation activation_of(int neuron) const {
    return kBlockActivation[neuron / n_neuron_per_block];
  }
};

// Sampling rule: value = raw * |spread| + mean, raw ~ N(0,1) or U(-1,1) per
// block family. Pure function of (genome, seed).
HiddenLayer sample_hidden_layer(const Genome& g, std::uint64_t seed);

// On-disk schema (owned here, used by the harness):
// {schema_version, problem_id, n_input, n_neuron_per_block,
//  means[], spreads[], lambda_raw, lambda_pde_raw?}
struct GenomeFile {
  Genome genome;
  int problem_id = 0;
};
std::string serialize_genome(const Genome& g, int problem_id);
GenomeFile deserialize_genome(const std::string& text);

}  // namespace bpinn
