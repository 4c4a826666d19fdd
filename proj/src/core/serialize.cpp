#include "core/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/spectral.hpp"

namespace smmsep::io {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume little endian");

constexpr char kMagic[8] = {'S', 'M', 'M', 'S', 'E', 'P', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::string FormatSeconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", s);
  return buf;
}

template <typename T>
void WriteRaw(std::ostream& os, const T* data, size_t count) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void ReadRaw(std::istream& is, T* data, size_t count, const std::string& what) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!is) ThrowIo("checkpoint: truncated " + what);
}

void WriteNpyImpl(const std::filesystem::path& path, const char* descr, const void* data,
                  size_t item_size, const std::vector<Index>& shape) {
  size_t count = 1;
  std::string dims;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] < 0) ThrowInvalid("npy: negative dimension");
    count *= static_cast<size_t>(shape[i]);
    dims += std::to_string(shape[i]) + (shape.size() == 1 ? "," : (i + 1 < shape.size() ? ", " : ""));
  }
  std::string header = std::string("{'descr': '") + descr + "', 'fortran_order': False, 'shape': (" +
                       dims + "), }";
  const size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("npy: cannot open " + path.string() + " for writing");
  os.write("\x93NUMPY\x01\x00", 8);
  const std::uint16_t len = static_cast<std::uint16_t>(header.size());
  WriteRaw(os, &len, 1);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(count * item_size));
  if (!os) ThrowIo("npy: write failed for " + path.string());
}

}  // namespace

std::string FormatRttm(const std::vector<RttmSegment>& segments) {
  std::string out;
  for (const auto& s : segments)
    out += "SPEAKER " + s.file + " 1 " + FormatSeconds(s.onset_s) + " " + FormatSeconds(s.duration_s) +
           " <NA> <NA> " + s.speaker + " <NA> <NA>\n";
  return out;
}

std::vector<RttmSegment> ParseRttm(const std::string& text) {
  std::vector<RttmSegment> out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (fields.empty() || fields[0].starts_with("#")) continue;
    if (fields[0] != "SPEAKER") continue;
    if (fields.size() < 8) ThrowIo("rttm: line " + std::to_string(line_no) + " has too few fields");
    RttmSegment s;
    s.file = fields[1];
    try {
      s.onset_s = std::stod(fields[3]);
      s.duration_s = std::stod(fields[4]);
    } catch (const std::exception&) {
      ThrowIo("rttm: line " + std::to_string(line_no) + " has a malformed time");
    }
    if (s.onset_s < 0.0 || s.duration_s < 0.0)
      ThrowIo("rttm: line " + std::to_string(line_no) + " has a negative time");
    s.speaker = fields[7];
    out.push_back(std::move(s));
  }
  return out;
}

void WriteRttm(const std::filesystem::path& path, const std::vector<RttmSegment>& segments) {
  WriteText(path, FormatRttm(segments));
}

std::vector<RttmSegment> ReadRttm(const std::filesystem::path& path) { return ParseRttm(ReadText(path)); }

std::vector<RttmSegment> SegmentsToRttm(const std::vector<extraction::ExtractedSegment>& segments,
                                        int sample_rate, const std::string& file_id) {
  std::vector<RttmSegment> out;
  const double fs = static_cast<double>(sample_rate);
  for (const auto& s : segments)
    out.push_back({file_id, "spk" + std::to_string(s.speaker), static_cast<double>(s.start_sample) / fs,
                   static_cast<double>(s.end_sample - s.start_sample) / fs});
  return out;
}

ActivityMatrix RttmToActivity(const std::vector<RttmSegment>& segments, const StftGeometry& g,
                              std::vector<std::string>* speakers) {
  std::vector<std::string> names;
  if (speakers && !speakers->empty()) names = *speakers;
  for (const auto& s : segments)
    if (std::find(names.begin(), names.end(), s.speaker) == names.end()) names.push_back(s.speaker);
  const Index frames = spectral::NumFrames(g.signal_length, g.frame_size, g.frame_shift);
  ActivityMatrix a;
  a.active = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
      frames, static_cast<Index>(names.size()), false);
  const double fs = static_cast<double>(g.sample_rate);
  for (const auto& s : segments) {
    const Index k = std::find(names.begin(), names.end(), s.speaker) - names.begin();
    const Index begin = static_cast<Index>(std::llround(s.onset_s * fs));
    const Index end = static_cast<Index>(std::llround((s.onset_s + s.duration_s) * fs));
    for (Index t = 0; t < frames; ++t) {
      const Index c = spectral::FrameCenter(t, g.frame_size, g.frame_shift);
      if (c >= begin && c < end) a.active(t, k) = true;
    }
  }
  if (speakers) *speakers = names;
  return a;
}

std::string ManifestJson(const extraction::Extraction& extraction, const std::vector<Index>& classes,
                         const StftGeometry& g, const std::vector<std::string>& wav_names) {
  json j;
  j["sample_rate"] = g.sample_rate;
  j["num_samples"] = g.signal_length;
  j["frame_size"] = g.frame_size;
  j["frame_shift"] = g.frame_shift;
  j["speakers"] = json::array();
  for (size_t s = 0; s < classes.size(); ++s)
    j["speakers"].push_back({{"id", "spk" + std::to_string(s)},
                             {"mixture_class", classes[s]},
                             {"wav", s < wav_names.size() ? wav_names[s] : ""}});
  j["segments"] = json::array();
  for (const auto& s : extraction.segments)
    j["segments"].push_back({{"speaker", "spk" + std::to_string(s.speaker)},
                             {"start_sample", s.start_sample},
                             {"end_sample", s.end_sample},
                             {"start_frame", s.frames.begin},
                             {"end_frame", s.frames.end}});
  j["skipped_segments"] = extraction.skipped_segments;
  return j.dump(2);
}

void SaveCheckpoint(const std::filesystem::path& path, const cacgmm::MixtureState& state) {
  const Index t = state.priors.frames(), c = state.priors.classes();
  const Index f = state.posteriors.bins(), m = state.parameters.channels();
  if (state.posteriors.frames() != t || state.posteriors.classes() != c ||
      state.parameters.bins() != f || state.parameters.classes() != c)
    ThrowInvalid("checkpoint: inconsistent mixture state shapes");

  const size_t priors_bytes = static_cast<size_t>(t * c) * 8;
  const size_t post_bytes = state.posteriors.raw().size() * 8;
  const size_t param_bytes = static_cast<size_t>(f * c * m * m) * 16;
  json header;
  header["frames"] = t;
  header["bins"] = f;
  header["classes"] = c;
  header["channels"] = m;
  header["log_likelihood_trace"] = state.log_likelihood_trace;
  header["arrays"] = json::array(
      {{{"name", "priors"}, {"dtype", "<f8"}, {"shape", {c, t}}, {"offset", 0}, {"bytes", priors_bytes}},
       {{"name", "posteriors"}, {"dtype", "<f8"}, {"shape", {f, c, t}}, {"offset", priors_bytes}, {"bytes", post_bytes}},
       {{"name", "parameters"}, {"dtype", "<c16"}, {"shape", {f, c, m, m}},
        {"offset", priors_bytes + post_bytes}, {"bytes", param_bytes}}});
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  WriteRaw(os, &kCheckpointVersion, 1);
  const std::uint64_t len = text.size();
  WriteRaw(os, &len, 1);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  WriteRaw(os, state.priors.values.data(), static_cast<size_t>(t * c));
  WriteRaw(os, state.posteriors.raw().data(), state.posteriors.raw().size());
  for (Index fi = 0; fi < f; ++fi)
    for (Index k = 0; k < c; ++k) WriteRaw(os, state.parameters.at(fi, k).data(), static_cast<size_t>(m * m));
  if (!os) ThrowIo("checkpoint: write failed for " + path.string());
}

cacgmm::MixtureState LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    ThrowIo("checkpoint: " + path.string() + " is not a mixture state checkpoint");
  std::uint32_t version = 0;
  ReadRaw(is, &version, 1, "version");
  if (version != kCheckpointVersion) ThrowIo("checkpoint: unsupported version " + std::to_string(version));
  std::uint64_t len = 0;
  ReadRaw(is, &len, 1, "header length");
  if (len > (1ULL << 30)) ThrowIo("checkpoint: implausible header length");
  std::string text(len, '\0');
  ReadRaw(is, text.data(), len, "header");
  json header;
  Index t = 0, f = 0, c = 0, m = 0;
  cacgmm::MixtureState state;
  try {
    header = json::parse(text);
    t = header.at("frames").get<Index>();
    f = header.at("bins").get<Index>();
    c = header.at("classes").get<Index>();
    m = header.at("channels").get<Index>();
    state.log_likelihood_trace = header.at("log_likelihood_trace").get<std::vector<double>>();
  } catch (const json::exception& e) {
    ThrowIo(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (t < 0 || f < 0 || c < 0 || m < 0 || t * f * c > (Index{1} << 34))
    ThrowIo("checkpoint: implausible shapes in header");
  state.priors.values.resize(t, c);
  ReadRaw(is, state.priors.values.data(), static_cast<size_t>(t * c), "priors");
  state.posteriors = Posteriors(t, f, c);
  ReadRaw(is, state.posteriors.raw().data(), state.posteriors.raw().size(), "posteriors");
  state.parameters = ParameterSet(f, c, m);
  for (Index fi = 0; fi < f; ++fi)
    for (Index k = 0; k < c; ++k) ReadRaw(is, state.parameters.at(fi, k).data(), static_cast<size_t>(m * m), "parameters");
  return state;
}

void WriteNpy(const std::filesystem::path& path, const double* data, const std::vector<Index>& shape) {
  WriteNpyImpl(path, "<f8", data, 8, shape);
}
void WriteNpy(const std::filesystem::path& path, const cdouble* data, const std::vector<Index>& shape) {
  WriteNpyImpl(path, "<c16", data, 16, shape);
}
void WriteNpy(const std::filesystem::path& path, const std::uint8_t* data, const std::vector<Index>& shape) {
  WriteNpyImpl(path, "|u1", data, 1, shape);
}

std::string ReportJson(const eval::EvalReport& r) {
  json j;
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  j["si_sdr_db"] = json::array();
  for (size_t k = 0; k < r.si_sdr.size(); ++k)
    j["si_sdr_db"].push_back(r.si_sdr_defined[k] ? number(r.si_sdr[k]) : json(nullptr));
  j["si_sdr_defined"] = r.si_sdr_defined;
  j["mixture_si_sdr_db"] = json::array();
  for (double v : r.mixture_si_sdr) j["mixture_si_sdr_db"].push_back(number(v));
  j["mean_si_sdr_db"] = number(r.MeanSiSdr());
  j["mean_mixture_si_sdr_db"] = number(r.MeanMixtureSiSdr());
  j["permutation"] = r.permutation;
  j["der"] = {{"der", r.der.der},
              {"miss", r.der.miss},
              {"false_alarm", r.der.false_alarm},
              {"confusion", r.der.confusion},
              {"speech", r.der.speech}};
  j["runtime_s"] = r.runtime_s;
  return j.dump(2);
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ThrowIo("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) ThrowIo("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) ThrowIo("write failed for " + path.string());
}

}  // namespace smmsep::io
