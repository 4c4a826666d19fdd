#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace smmsep::testing {

Eigen::VectorXcd RandomComplexGaussian(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd v(n);
  for (Index i = 0; i < n; ++i) v(i) = cdouble(normal(rng), normal(rng));
  return v;
}

Eigen::VectorXcd RandomUnitVector(Index m, Rng& rng) {
  Eigen::VectorXcd v = RandomComplexGaussian(m, rng);
  return v / v.norm();
}

Eigen::MatrixXcd RandomHermitianPd(Index m, Rng& rng) {
  // Random unitary from the QR factorisation of a complex Gaussian matrix.
  Eigen::MatrixXcd g(m, m);
  for (Index j = 0; j < m; ++j) g.col(j) = RandomComplexGaussian(m, rng);
  const Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(g).householderQ();
  std::uniform_real_distribution<double> eig(0.05, 1.0);
  Eigen::VectorXd lambda(m);
  for (Index i = 0; i < m; ++i) lambda(i) = eig(rng);
  Eigen::MatrixXcd b = q * lambda.cast<cdouble>().asDiagonal() * q.adjoint();
  b = 0.5 * (b + b.adjoint()).eval();
  return b * (static_cast<double>(m) / b.trace().real());
}

Eigen::VectorXcd SampleCacg(const Eigen::MatrixXcd& b, Rng& rng) {
  const Eigen::MatrixXcd l = b.llt().matrixL();
  const Eigen::VectorXcd x = l * RandomComplexGaussian(b.rows(), rng);
  return x / x.norm();
}

Problem RandomProblem(Index frames, Index bins, Index channels, Index classes, std::uint64_t seed,
                      double masked_fraction) {
  Rng rng(seed);
  Problem p;
  p.params = ParameterSet(bins, classes, channels);
  for (Index f = 0; f < bins; ++f)
    for (Index k = 0; k < classes; ++k) p.params.at(f, k) = RandomHermitianPd(channels, rng);
  p.priors.values.resize(frames, classes);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (Index t = 0; t < frames; ++t) {
    for (Index k = 0; k < classes; ++k) p.priors.values(t, k) = gamma(rng) + 1e-3;
    p.priors.values.row(t) /= p.priors.values.row(t).sum();
  }
  p.z.data = ComplexTensor(frames, bins, channels);
  p.z.zero_norm.assign(static_cast<size_t>(frames * bins), 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::VectorXcd uniform =
      Eigen::VectorXcd::Constant(channels, cdouble(1.0 / std::sqrt(static_cast<double>(channels)), 0.0));
  for (Index f = 0; f < bins; ++f) {
    for (Index t = 0; t < frames; ++t) {
      if (u(rng) < masked_fraction) {
        p.z.zero_norm[static_cast<size_t>(f * frames + t)] = 1;
        p.z.data.bin(f).col(t) = uniform;
        continue;
      }
      double r = u(rng);
      Index k = 0;
      while (k + 1 < classes && r >= p.priors.values(t, k)) r -= p.priors.values(t, k++);
      p.z.data.bin(f).col(t) = SampleCacg(p.params.at(f, k), rng);
    }
  }
  return p;
}

Posteriors RandomPosteriors(Index frames, Index bins, Index classes, Rng& rng) {
  Posteriors g(frames, bins, classes);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (Index f = 0; f < bins; ++f) {
    for (Index t = 0; t < frames; ++t) {
      double s = 0.0;
      for (Index k = 0; k < classes; ++k) s += (g(t, f, k) = gamma(rng) + 1e-6);
      for (Index k = 0; k < classes; ++k) g(t, f, k) /= s;
    }
  }
  return g;
}

namespace {

// z^H B^-1 z as a sum over eigenpairs. Every term is positive, so the
// reference stays accurate for badly conditioned B.
double NaiveQuadraticForm(const Eigen::VectorXcd& z, const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& eig) {
  double q = 0.0;
  for (Index i = 0; i < z.size(); ++i) q += std::norm(eig.eigenvectors().col(i).dot(z)) / eig.eigenvalues()(i);
  return q;
}

}  // namespace

double NaiveLogPdf(const Eigen::VectorXcd& z, const Eigen::MatrixXcd& b) {
  const Index m = z.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(b);
  double log_det = 0.0;
  for (Index i = 0; i < m; ++i) log_det += std::log(eig.eigenvalues()(i));
  double factorial = 1.0;
  for (Index i = 2; i < m; ++i) factorial *= static_cast<double>(i);
  const double norm = factorial / (2.0 * std::pow(M_PI, static_cast<double>(m)));
  return std::log(norm) - log_det - static_cast<double>(m) * std::log(NaiveQuadraticForm(z, eig));
}

Eigen::MatrixXcd NaiveRegularize(const Eigen::MatrixXcd& b) {
  const Index m = b.rows();
  Eigen::MatrixXcd h(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) h(i, j) = 0.5 * (b(i, j) + std::conj(b(j, i)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double lo = 1e-10 * lambda.maxCoeff();
  bool floored = false;
  for (Index i = 0; i < m; ++i) {
    if (lambda(i) < lo) {
      lambda(i) = lo;
      floored = true;
    }
  }
  if (floored) h = eig.eigenvectors() * lambda.cast<cdouble>().asDiagonal() * eig.eigenvectors().adjoint();
  double trace = 0.0;
  for (Index i = 0; i < m; ++i) trace += h(i, i).real();
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) h(i, j) *= static_cast<double>(m) / trace;
  return h;
}

namespace {

bool Masked(const DirectionalObservations& z, Index t, Index f) { return z.masked(t, f); }

Eigen::VectorXcd Observation(const DirectionalObservations& z, Index t, Index f) {
  Eigen::VectorXcd v(z.channels());
  for (Index m = 0; m < z.channels(); ++m) v(m) = z.data(t, f, m);
  return v;
}

}  // namespace

std::vector<std::vector<double>> NaivePriors(const DirectionalObservations& z,
                                             const std::vector<std::vector<std::vector<double>>>& gamma) {
  const size_t bins = gamma.size(), frames = gamma[0].size(), classes = gamma[0][0].size();
  std::vector<std::vector<double>> pi(frames, std::vector<double>(classes, 0.0));
  for (size_t t = 0; t < frames; ++t) {
    double count = 0.0;
    for (size_t f = 0; f < bins; ++f) {
      if (Masked(z, static_cast<Index>(t), static_cast<Index>(f))) continue;
      count += 1.0;
      for (size_t k = 0; k < classes; ++k) pi[t][k] += gamma[f][t][k];
    }
    if (count == 0.0) {
      for (size_t f = 0; f < bins; ++f)
        for (size_t k = 0; k < classes; ++k) pi[t][k] += gamma[f][t][k];
      count = static_cast<double>(bins);
    }
    for (size_t k = 0; k < classes; ++k) pi[t][k] /= count;
  }
  return pi;
}

std::vector<std::vector<Eigen::MatrixXcd>> NaiveParameters(
    const DirectionalObservations& z, const std::vector<std::vector<std::vector<double>>>& gamma,
    const std::vector<std::vector<Eigen::MatrixXcd>>& prev) {
  const Index m = z.channels();
  auto next = prev;
  for (size_t f = 0; f < gamma.size(); ++f) {
    for (size_t k = 0; k < prev[f].size(); ++k) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(prev[f][k]);
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
      double mass = 0.0;
      for (size_t t = 0; t < gamma[f].size(); ++t) {
        if (Masked(z, static_cast<Index>(t), static_cast<Index>(f))) continue;
        const Eigen::VectorXcd v = Observation(z, static_cast<Index>(t), static_cast<Index>(f));
        const double q = NaiveQuadraticForm(v, eig);
        const double w = gamma[f][t][k];
        mass += w;
        for (Index i = 0; i < m; ++i)
          for (Index j = 0; j < m; ++j) acc(i, j) += w * v(i) * std::conj(v(j)) / q;
      }
      if (!(mass > 1e-100)) continue;
      next[f][k] = NaiveRegularize(acc * (static_cast<double>(m) / mass));
    }
  }
  return next;
}

double NaiveEStep(const DirectionalObservations& z, const std::vector<std::vector<double>>& pi,
                  const std::vector<std::vector<Eigen::MatrixXcd>>& b,
                  std::vector<std::vector<std::vector<double>>>& gamma) {
  const size_t bins = b.size(), classes = b[0].size(), frames = pi.size();
  gamma.assign(bins, std::vector<std::vector<double>>(frames, std::vector<double>(classes, 0.0)));
  double ll = 0.0;
  for (size_t f = 0; f < bins; ++f) {
    for (size_t t = 0; t < frames; ++t) {
      if (Masked(z, static_cast<Index>(t), static_cast<Index>(f))) {
        for (size_t k = 0; k < classes; ++k) gamma[f][t][k] = 1.0 / static_cast<double>(classes);
        continue;
      }
      const Eigen::VectorXcd v = Observation(z, static_cast<Index>(t), static_cast<Index>(f));
      std::vector<double> lp(classes);
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < classes; ++k) {
        lp[k] = std::log(pi[t][k]) + NaiveLogPdf(v, b[f][k]);
        mx = std::max(mx, lp[k]);
      }
      double s = 0.0;
      for (size_t k = 0; k < classes; ++k) s += std::exp(lp[k] - mx);
      const double lse = mx + std::log(s);
      for (size_t k = 0; k < classes; ++k) gamma[f][t][k] = std::exp(lp[k] - lse);
      ll += lse;
    }
  }
  return ll;
}

std::vector<std::vector<std::vector<double>>> ToNested(const Posteriors& g) {
  std::vector<std::vector<std::vector<double>>> out(
      static_cast<size_t>(g.bins()),
      std::vector<std::vector<double>>(static_cast<size_t>(g.frames()),
                                       std::vector<double>(static_cast<size_t>(g.classes()))));
  for (Index f = 0; f < g.bins(); ++f)
    for (Index t = 0; t < g.frames(); ++t)
      for (Index k = 0; k < g.classes(); ++k)
        out[static_cast<size_t>(f)][static_cast<size_t>(t)][static_cast<size_t>(k)] = g(t, f, k);
  return out;
}

std::vector<NaiveState> NaiveFit(const DirectionalObservations& z, const Posteriors& init, int iterations) {
  const Index m = z.channels();
  NaiveState s;
  s.gamma = ToNested(init);
  s.b.assign(static_cast<size_t>(init.bins()),
             std::vector<Eigen::MatrixXcd>(static_cast<size_t>(init.classes()), Eigen::MatrixXcd::Identity(m, m)));
  std::vector<NaiveState> trace;
  for (int it = 0; it < iterations; ++it) {
    s.pi = NaivePriors(z, s.gamma);
    s.b = NaiveParameters(z, s.gamma, s.b);
    s.log_likelihood = NaiveEStep(z, s.pi, s.b, s.gamma);
    trace.push_back(s);
  }
  return trace;
}

Eigen::MatrixXcd NaiveSingleCacg(const std::vector<Eigen::VectorXcd>& z, int max_iterations, double tol) {
  const Index m = z.front().size();
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(m, m);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(b);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
    for (const auto& v : z) {
      const double q = NaiveQuadraticForm(v, eig);
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) acc(i, j) += v(i) * std::conj(v(j)) / q;
    }
    const Eigen::MatrixXcd next = NaiveRegularize(acc * (static_cast<double>(m) / static_cast<double>(z.size())));
    const double change = (next - b).norm() / b.norm();
    b = next;
    if (change < tol) break;
  }
  return b;
}

std::vector<double> NaiveDilate(const std::vector<double>& x, Index window) {
  const Index n = static_cast<Index>(x.size()), h = window / 2;
  std::vector<double> out(x.size());
  for (Index i = 0; i < n; ++i) {
    double v = -std::numeric_limits<double>::infinity();
    for (Index j = i - h; j <= i + h; ++j)
      if (j >= 0 && j < n) v = std::max(v, x[static_cast<size_t>(j)]);
    out[static_cast<size_t>(i)] = v;
  }
  return out;
}

std::vector<double> NaiveErode(const std::vector<double>& x, Index window) {
  const Index n = static_cast<Index>(x.size()), h = window / 2;
  std::vector<double> out(x.size());
  for (Index i = 0; i < n; ++i) {
    double v = std::numeric_limits<double>::infinity();
    for (Index j = i - h; j <= i + h; ++j)
      if (j >= 0 && j < n) v = std::min(v, x[static_cast<size_t>(j)]);
    out[static_cast<size_t>(i)] = v;
  }
  return out;
}

std::vector<int> NaiveCompleteLinkage(const Eigen::MatrixXd& d, Index num_clusters) {
  std::vector<std::vector<Index>> clusters;
  for (Index i = 0; i < d.rows(); ++i) clusters.push_back({i});
  while (static_cast<Index>(clusters.size()) > num_clusters) {
    std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    double best = std::numeric_limits<double>::infinity();
    size_t bi = 0, bj = 1;
    for (size_t i = 0; i < clusters.size(); ++i) {
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        double diameter = -std::numeric_limits<double>::infinity();
        for (Index a : clusters[i])
          for (Index b : clusters[j]) diameter = std::max(diameter, d(a, b));
        if (diameter < best) {
          best = diameter;
          bi = i;
          bj = j;
        }
      }
    }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<int> labels(static_cast<size_t>(d.rows()));
  for (size_t c = 0; c < clusters.size(); ++c)
    for (Index i : clusters[c]) labels[static_cast<size_t>(i)] = static_cast<int>(c);
  return labels;
}

bool SamePartition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (size_t i = 0; i < a.size(); ++i) {
    auto [x, inserted_x] = ab.emplace(a[i], b[i]);
    auto [y, inserted_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

Eigen::MatrixXd RandomDistances(Index n, Rng& rng, bool quantized) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> level(1, 5);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = quantized ? 0.2 * level(rng) : u(rng);
  return d;
}

std::vector<std::vector<int>> AllPermutations(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

cacgmm::MixtureState RandomState(Index frames, Index bins, Index classes, Index channels, Rng& rng) {
  cacgmm::MixtureState s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, classes - 1);
  // Activity in blocks of random length; each block boosts a random class
  // pair so that IoUs vary.
  Eigen::MatrixXd weight = Eigen::MatrixXd::Constant(frames, classes, 0.01);
  for (Index t = 0; t < frames;) {
    const Index len = 5 + static_cast<Index>(u(rng) * 40.0);
    const Index a = pick(rng), b = pick(rng);
    for (Index i = t; i < std::min(frames, t + len); ++i) {
      weight(i, a) += 1.0 + u(rng);
      weight(i, b) += u(rng);
      weight(i, classes - 1) += 0.3 * u(rng);
    }
    t += len;
  }
  s.priors.values = weight;
  for (Index t = 0; t < frames; ++t) s.priors.values.row(t) /= s.priors.values.row(t).sum();
  s.posteriors = Posteriors(frames, bins, classes);
  for (Index f = 0; f < bins; ++f) {
    for (Index t = 0; t < frames; ++t) {
      double sum = 0.0;
      for (Index k = 0; k < classes; ++k) sum += (s.posteriors(t, f, k) = s.priors.values(t, k) * (0.2 + u(rng)));
      for (Index k = 0; k < classes; ++k) s.posteriors(t, f, k) /= sum;
    }
  }
  s.parameters = ParameterSet(bins, classes, channels);
  for (Index f = 0; f < bins; ++f)
    for (Index k = 0; k < classes; ++k) s.parameters.at(f, k) = RandomHermitianPd(channels, rng);
  s.log_likelihood_trace = {-1.0, -0.5};
  return s;
}

}  // namespace smmsep::testing
