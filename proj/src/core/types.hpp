// Core value types shared by every stage of the separation pipeline.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smmsep {

using Index = Eigen::Index;
using cdouble = std::complex<double>;

class Error : public std::runtime_error {
 public:
  enum class Kind { kInvalidArgument, kNumerical, kIo, kState };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& msg) {
  throw Error(Error::Kind::kInvalidArgument, msg);
}
[[noreturn]] inline void ThrowNumerical(const std::string& msg) {
  throw Error(Error::Kind::kNumerical, msg);
}
[[noreturn]] inline void ThrowIo(const std::string& msg) { throw Error(Error::Kind::kIo, msg); }

// Error raised inside a named pipeline stage; what() is prefixed with it.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : Error(cause.kind(), stage + ": " + cause.what()), stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Multichannel time-domain audio. Column c holds channel c.
struct TimeSignal {
  Eigen::MatrixXd samples;  // num_samples x num_channels
  int sample_rate = 16000;

  TimeSignal() = default;
  TimeSignal(Index num_samples, Index num_channels, int rate)
      : samples(Eigen::MatrixXd::Zero(num_samples, num_channels)), sample_rate(rate) {}

  Index num_samples() const { return samples.rows(); }
  Index num_channels() const { return samples.cols(); }
};

// Complex tensor indexed (frame t, bin f, channel m). Storage is bin-major so
// that all frames of one frequency form a contiguous M x T column-major block;
// every per-frequency algorithm in the library works on those blocks.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  ComplexTensor(Index frames, Index bins, Index channels)
      : frames_(frames), bins_(bins), channels_(channels),
        data_(static_cast<size_t>(frames * bins * channels), cdouble(0.0, 0.0)) {}

  Index frames() const { return frames_; }
  Index bins() const { return bins_; }
  Index channels() const { return channels_; }

  cdouble& operator()(Index t, Index f, Index m) {
    return data_[static_cast<size_t>((f * frames_ + t) * channels_ + m)];
  }
  const cdouble& operator()(Index t, Index f, Index m) const {
    return data_[static_cast<size_t>((f * frames_ + t) * channels_ + m)];
  }

  // M x T view of frequency bin f.
  Eigen::Map<Eigen::MatrixXcd> bin(Index f) {
    return {data_.data() + f * frames_ * channels_, channels_, frames_};
  }
  Eigen::Map<const Eigen::MatrixXcd> bin(Index f) const {
    return {data_.data() + f * frames_ * channels_, channels_, frames_};
  }

  std::vector<cdouble>& raw() { return data_; }
  const std::vector<cdouble>& raw() const { return data_; }

 private:
  Index frames_ = 0;
  Index bins_ = 0;
  Index channels_ = 0;
  std::vector<cdouble> data_;
};

struct StftGeometry {
  int frame_size = 1024;
  int frame_shift = 256;
  int sample_rate = 16000;
  Index signal_length = 0;  // samples of the analysed signal, restored by istft

  int padding() const { return frame_size - frame_shift; }
  Index bins() const { return frame_size / 2 + 1; }
};

struct MultichannelSpectrogram {
  ComplexTensor data;
  StftGeometry geometry;

  Index frames() const { return data.frames(); }
  Index bins() const { return data.bins(); }
  Index channels() const { return data.channels(); }
};

struct DirectionalObservations {
  ComplexTensor data;
  // zero_norm[f * T + t] is 1 where the observation vector had zero norm.
  std::vector<std::uint8_t> zero_norm;

  Index frames() const { return data.frames(); }
  Index bins() const { return data.bins(); }
  Index channels() const { return data.channels(); }
  bool masked(Index t, Index f) const { return zero_norm[static_cast<size_t>(f * frames() + t)] != 0; }
};

// Time-varying class priors, T x C. Rows sum to one.
struct Priors {
  Eigen::MatrixXd values;

  Index frames() const { return values.rows(); }
  Index classes() const { return values.cols(); }
};

// Class posteriors gamma(t, f, k). Each frequency is a contiguous T x C block.
class Posteriors {
 public:
  Posteriors() = default;
  Posteriors(Index frames, Index bins, Index classes)
      : frames_(frames), bins_(bins), classes_(classes),
        data_(static_cast<size_t>(frames * bins * classes), 0.0) {}

  Index frames() const { return frames_; }
  Index bins() const { return bins_; }
  Index classes() const { return classes_; }

  double& operator()(Index t, Index f, Index k) {
    return data_[static_cast<size_t>((f * classes_ + k) * frames_ + t)];
  }
  double operator()(Index t, Index f, Index k) const {
    return data_[static_cast<size_t>((f * classes_ + k) * frames_ + t)];
  }

  Eigen::Map<Eigen::MatrixXd> bin(Index f) {
    return {data_.data() + f * classes_ * frames_, frames_, classes_};
  }
  Eigen::Map<const Eigen::MatrixXd> bin(Index f) const {
    return {data_.data() + f * classes_ * frames_, frames_, classes_};
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  Index frames_ = 0;
  Index bins_ = 0;
  Index classes_ = 0;
  std::vector<double> data_;
};

// Hermitian cACG parameter matrices B(f, k).
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(Index bins, Index classes, Index channels)
      : bins_(bins), classes_(classes), channels_(channels),
        mats_(static_cast<size_t>(bins * classes), Eigen::MatrixXcd::Identity(channels, channels)) {}

  Index bins() const { return bins_; }
  Index classes() const { return classes_; }
  Index channels() const { return channels_; }

  Eigen::MatrixXcd& at(Index f, Index k) { return mats_[static_cast<size_t>(f * classes_ + k)]; }
  const Eigen::MatrixXcd& at(Index f, Index k) const {
    return mats_[static_cast<size_t>(f * classes_ + k)];
  }

 private:
  Index bins_ = 0;
  Index classes_ = 0;
  Index channels_ = 0;
  std::vector<Eigen::MatrixXcd> mats_;
};

// Boolean speaker activity a(t, k), T x K.
struct ActivityMatrix {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active;

  Index frames() const { return active.rows(); }
  Index speakers() const { return active.cols(); }
};

// Half-open frame interval [begin, end).
struct FrameRange {
  Index begin = 0;
  Index end = 0;

  Index length() const { return end - begin; }
  bool operator==(const FrameRange&) const = default;
};

}  // namespace smmsep
