#pragma once

#include <cstddef>

#include "adamra/adamra.hpp"

// Straight-line reference evaluations. Nothing here calls the library's
// matmul, softmax or attention routines; only Matrix storage is shared.
namespace adamra::oracles {

Matrix naive_matmul(const Matrix& a, const Matrix& b);

// out_i = Σ_j sim(q_i, k_j) v_j / (Σ_j sim(q_i, k_j) + eps) with the n_q × n_k
// similarity sim = φ(q_i)·φ(k_j) formed explicitly.
Matrix quadratic_kernel_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                  FeatureMap phi, double eps);

// Explicit softmax(q kᵀ · scale) v.
Matrix naive_softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v, double scale);

// Explicit-loop AdaMRA forward for learned routing: projections, segment
// means, router softmax with first-max selection, per-subhead quadratic
// attention, gate scaling and output projection.
Matrix adamra_oracle(const Matrix& x, const AdamraParams& p, const AdamraConfig& cfg);

// Landmark count at length n, computed in floating point.
std::size_t oracle_landmarks(double rate, std::size_t n);

}  // namespace adamra::oracles
