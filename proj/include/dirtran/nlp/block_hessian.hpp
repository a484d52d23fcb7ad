#ifndef DIRTRAN_NLP_BLOCK_HESSIAN_HPP
#define DIRTRAN_NLP_BLOCK_HESSIAN_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "dirtran/errors.hpp"

namespace dirtran {

/// Block-diagonal damped-BFGS approximation of the Lagrangian Hessian.
/// Direct-transcription Lagrangians have (near) block-diagonal curvature in
/// per-node variable groups, so updating one SPD block per node keeps the
/// approximation sparse and the KKT systems banded. With no block structure
/// given, a single dense block recovers classic damped BFGS.
class BlockHessian {
 public:
  BlockHessian(int dim, std::vector<std::vector<int>> blocks,
               std::vector<Eigen::MatrixXd> initial)
      : dim_(dim), blocks_(std::move(blocks)), initial_(std::move(initial)) {
    if (blocks_.empty()) {
      blocks_.emplace_back();
      for (int i = 0; i < dim_; ++i) blocks_.back().push_back(i);
    }
    if (initial_.empty()) {
      for (const auto& block : blocks_) {
        initial_.push_back(Eigen::MatrixXd::Identity(
            static_cast<int>(block.size()), static_cast<int>(block.size())));
      }
    }
    if (initial_.size() != blocks_.size()) {
      throw ContractViolation("BlockHessian: initial blocks misaligned");
    }
    reset();
  }

  void reset() {
    h_ = initial_;
    for (auto& h : h_) {
      // Symmetrize and floor the diagonal so every block starts SPD.
      h = 0.5 * (h + h.transpose()).eval();
      for (int i = 0; i < h.rows(); ++i) {
        h(i, i) = std::max(h(i, i), 1e-8);
      }
    }
    dirty_ = true;
  }

  int dim() const { return dim_; }

  /// Powell-damped BFGS update from step s and Lagrangian-gradient
  /// difference r, applied blockwise.
  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& r) {
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const auto& idx = blocks_[b];
      const int nb = static_cast<int>(idx.size());
      Eigen::VectorXd sb(nb), rb(nb);
      for (int i = 0; i < nb; ++i) {
        sb[i] = s[idx[i]];
        rb[i] = r[idx[i]];
      }
      const double s_norm2 = sb.squaredNorm();
      if (!(s_norm2 > 1e-24)) continue;
      Eigen::MatrixXd& h = h_[b];
      const Eigen::VectorXd hs = h * sb;
      const double shs = sb.dot(hs);
      if (!(shs > 1e-18)) continue;
      const double sr = sb.dot(rb);
      double theta = 1.0;
      if (sr < 0.2 * shs) {
        theta = 0.8 * shs / (shs - sr);
      }
      const Eigen::VectorXd rt = theta * rb + (1.0 - theta) * hs;
      const double srt = sb.dot(rt);
      if (!(srt > 1e-18)) continue;
      h += rt * rt.transpose() / srt - hs * hs.transpose() / shs;
      h = 0.5 * (h + h.transpose()).eval();
      if (!h.allFinite() || h.cwiseAbs().maxCoeff() > 1e10) {
        h = initial_[b];
      }
    }
    dirty_ = true;
  }

  const Eigen::SparseMatrix<double>& matrix() const {
    if (dirty_) {
      std::vector<Eigen::Triplet<double>> triplets;
      for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& idx = blocks_[b];
        for (size_t i = 0; i < idx.size(); ++i) {
          for (size_t j = 0; j < idx.size(); ++j) {
            triplets.emplace_back(idx[i], idx[j], h_[b](i, j));
          }
        }
      }
      assembled_.resize(dim_, dim_);
      assembled_.setFromTriplets(triplets.begin(), triplets.end());
      dirty_ = false;
    }
    return assembled_;
  }

 private:
  int dim_;
  std::vector<std::vector<int>> blocks_;
  std::vector<Eigen::MatrixXd> initial_;
  std::vector<Eigen::MatrixXd> h_;
  mutable Eigen::SparseMatrix<double> assembled_;
  mutable bool dirty_ = true;
};

}  // namespace dirtran

#endif  // DIRTRAN_NLP_BLOCK_HESSIAN_HPP
