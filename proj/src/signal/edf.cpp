#include "tempo/signal/edf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "tempo/common/csv.hpp"
#include "tempo/common/log.hpp"

namespace tempo::signal {

namespace {

constexpr std::size_t kMainHeader = 256;
constexpr std::size_t kSignalHeader = 256;

const char* kind_name(EdfError::Kind k) {
  switch (k) {
    case EdfError::Kind::HeaderLength: return "malformed header length";
    case EdfError::Kind::NonNumericField: return "non-numeric header field";
    case EdfError::Kind::DigitalRange: return "digital maximum not above digital minimum";
    case EdfError::Kind::TruncatedRecord: return "truncated data record";
    case EdfError::Kind::Discontinuous: return "EDF+ discontinuous recording not supported";
  }
  return "EDF error";
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(' ');
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(' ');
  return std::string(s.substr(a, b - a + 1));
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string text(std::size_t offset, std::size_t width) const {
    if (offset + width > bytes_.size()) {
      throw EdfError(EdfError::Kind::HeaderLength, bytes_.size(),
                     "header field at " + std::to_string(offset) + " runs past end of stream");
    }
    return trim(std::string_view(reinterpret_cast<const char*>(bytes_.data() + offset), width));
  }

  double real(std::size_t offset, std::size_t width) const {
    const std::string s = text(offset, width);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw EdfError(EdfError::Kind::NonNumericField, offset, "'" + s + "'");
    }
    return v;
  }

  long integer(std::size_t offset, std::size_t width) const {
    const std::string s = text(offset, width);
    long v = 0;
    const char* begin = s.data();
    if (!s.empty() && s.front() == '+') ++begin;
    const auto res = std::from_chars(begin, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw EdfError(EdfError::Kind::NonNumericField, offset, "'" + s + "'");
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
};

void put_field(std::vector<std::uint8_t>& out, std::string_view value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    out.push_back(i < value.size() ? static_cast<std::uint8_t>(value[i]) : static_cast<std::uint8_t>(' '));
  }
}

/// Shortest %g rendering that fits in `width` characters.
std::string fit_number(double v, std::size_t width) {
  char buf[64];
  for (int precision = static_cast<int>(width); precision >= 1; --precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::string_view(buf).size() <= width) return buf;
  }
  throw ConfigError("value " + std::to_string(v) + " does not fit an EDF header field");
}

double round_trip(double v) { return csv::parse_real(fit_number(v, 8)); }

}  // namespace

EdfError::EdfError(Kind kind, std::size_t offset, const std::string& detail)
    : Error(std::string("EDF: ") + kind_name(kind) + " at byte offset " + std::to_string(offset) +
            (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      offset_(offset) {}

bool EdfSignalHeader::is_annotation() const { return label == "EDF Annotations"; }

double EdfSignalHeader::physical(std::int16_t digital) const {
  return (static_cast<double>(digital) - digital_min) * (physical_max - physical_min) /
             static_cast<double>(digital_max - digital_min) +
         physical_min;
}

EdfFile parse_edf_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMainHeader) {
    throw EdfError(EdfError::Kind::HeaderLength, bytes.size(), "stream shorter than the 256-byte header");
  }
  const HeaderReader r(bytes);
  EdfFile f;
  f.header.version = r.text(0, 8);
  f.header.patient = r.text(8, 80);
  f.header.recording = r.text(88, 80);
  f.header.start_date = r.text(168, 8);
  f.header.start_time = r.text(176, 8);
  const long header_bytes = r.integer(184, 8);
  f.header.reserved = r.text(192, 44);
  f.header.record_count = r.integer(236, 8);
  f.header.record_duration_s = r.real(244, 8);
  const long ns_raw = r.integer(252, 4);
  if (ns_raw < 1) throw EdfError(EdfError::Kind::HeaderLength, 252, "signal count must be positive");
  if (f.header.reserved.rfind("EDF+D", 0) == 0) {
    throw EdfError(EdfError::Kind::Discontinuous, 192, "only continuous records are supported");
  }
  const auto ns = static_cast<std::size_t>(ns_raw);
  const std::size_t expected_header = kMainHeader + kSignalHeader * ns;
  if (header_bytes != static_cast<long>(expected_header)) {
    throw EdfError(EdfError::Kind::HeaderLength, 184,
                   "header advertises " + std::to_string(header_bytes) + " bytes, " + std::to_string(ns) +
                       " signals need " + std::to_string(expected_header));
  }
  if (bytes.size() < expected_header) {
    throw EdfError(EdfError::Kind::HeaderLength, bytes.size(),
                   "stream ends inside the signal headers (need " + std::to_string(expected_header) + " bytes)");
  }

  f.signals.resize(ns);
  std::size_t base = kMainHeader;
  auto field = [&](std::size_t width) {
    const std::size_t start = base;
    base += width * ns;
    return start;
  };
  const std::size_t o_label = field(16), o_trans = field(80), o_dim = field(8), o_pmin = field(8),
                    o_pmax = field(8), o_dmin = field(8), o_dmax = field(8), o_pre = field(80), o_spr = field(8),
                    o_res = field(32);
  for (std::size_t i = 0; i < ns; ++i) {
    auto& s = f.signals[i];
    s.label = r.text(o_label + 16 * i, 16);
    s.transducer = r.text(o_trans + 80 * i, 80);
    s.physical_dimension = r.text(o_dim + 8 * i, 8);
    s.physical_min = r.real(o_pmin + 8 * i, 8);
    s.physical_max = r.real(o_pmax + 8 * i, 8);
    s.digital_min = static_cast<int>(r.integer(o_dmin + 8 * i, 8));
    s.digital_max = static_cast<int>(r.integer(o_dmax + 8 * i, 8));
    s.prefiltering = r.text(o_pre + 80 * i, 80);
    const long spr = r.integer(o_spr + 8 * i, 8);
    s.reserved = r.text(o_res + 32 * i, 32);
    if (s.digital_max <= s.digital_min) {
      throw EdfError(EdfError::Kind::DigitalRange, o_dmax + 8 * i,
                     "signal " + std::to_string(i) + " ('" + s.label + "'): digital range [" +
                         std::to_string(s.digital_min) + ", " + std::to_string(s.digital_max) + "]");
    }
    if (spr < 1) throw EdfError(EdfError::Kind::NonNumericField, o_spr + 8 * i, "samples per record must be >= 1");
    s.samples_per_record = static_cast<std::size_t>(spr);
  }

  std::size_t record_samples = 0;
  for (const auto& s : f.signals) record_samples += s.samples_per_record;
  const std::size_t record_bytes = 2 * record_samples;
  const std::size_t data_bytes = bytes.size() - expected_header;
  if (f.header.record_count < 0) {
    // -1: count unknown at acquisition time; derive it from the stream length.
    f.header.record_count = static_cast<long>(data_bytes / record_bytes);
  }
  const auto records = static_cast<std::size_t>(f.header.record_count);
  for (std::size_t rec = 0; rec < records; ++rec) {
    const std::size_t start = expected_header + rec * record_bytes;
    if (start + record_bytes > bytes.size()) {
      throw EdfError(EdfError::Kind::TruncatedRecord, start,
                     "record " + std::to_string(rec) + " needs " + std::to_string(record_bytes) + " bytes, " +
                         std::to_string(bytes.size() - std::min(bytes.size(), start)) + " remain");
    }
  }

  f.samples.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) f.samples[i].reserve(records * f.signals[i].samples_per_record);
  const std::uint8_t* p = bytes.data() + expected_header;
  for (std::size_t rec = 0; rec < records; ++rec) {
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t k = 0; k < f.signals[i].samples_per_record; ++k) {
        const auto lo = static_cast<std::uint16_t>(p[0]);
        const auto hi = static_cast<std::uint16_t>(p[1]);
        f.samples[i].push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
        p += 2;
      }
    }
  }
  return f;
}

std::vector<std::uint8_t> write_edf_file(const EdfFile& f) {
  const std::size_t ns = f.signals.size();
  if (ns == 0) throw ConfigError("EDF writer: no signals");
  if (f.samples.size() != ns) throw ShapeError("EDF writer: sample arrays do not match signal headers");
  const auto records = static_cast<std::size_t>(std::max(0L, f.header.record_count));
  for (std::size_t i = 0; i < ns; ++i) {
    if (f.samples[i].size() != records * f.signals[i].samples_per_record) {
      throw ShapeError("EDF writer: signal " + std::to_string(i) + " holds " + std::to_string(f.samples[i].size()) +
                       " samples, header implies " + std::to_string(records * f.signals[i].samples_per_record));
    }
  }
  std::vector<std::uint8_t> out;
  const std::size_t header_bytes = kMainHeader + kSignalHeader * ns;
  out.reserve(header_bytes);
  put_field(out, f.header.version, 8);
  put_field(out, f.header.patient, 80);
  put_field(out, f.header.recording, 80);
  put_field(out, f.header.start_date, 8);
  put_field(out, f.header.start_time, 8);
  put_field(out, std::to_string(header_bytes), 8);
  put_field(out, f.header.reserved, 44);
  put_field(out, std::to_string(f.header.record_count), 8);
  put_field(out, fit_number(f.header.record_duration_s, 8), 8);
  put_field(out, std::to_string(ns), 4);
  for (const auto& s : f.signals) put_field(out, s.label, 16);
  for (const auto& s : f.signals) put_field(out, s.transducer, 80);
  for (const auto& s : f.signals) put_field(out, s.physical_dimension, 8);
  for (const auto& s : f.signals) put_field(out, fit_number(s.physical_min, 8), 8);
  for (const auto& s : f.signals) put_field(out, fit_number(s.physical_max, 8), 8);
  for (const auto& s : f.signals) put_field(out, std::to_string(s.digital_min), 8);
  for (const auto& s : f.signals) put_field(out, std::to_string(s.digital_max), 8);
  for (const auto& s : f.signals) put_field(out, s.prefiltering, 80);
  for (const auto& s : f.signals) put_field(out, std::to_string(s.samples_per_record), 8);
  for (const auto& s : f.signals) put_field(out, s.reserved, 32);

  std::size_t record_samples = 0;
  for (const auto& s : f.signals) record_samples += s.samples_per_record;
  out.reserve(header_bytes + records * record_samples * 2);
  for (std::size_t rec = 0; rec < records; ++rec) {
    for (std::size_t i = 0; i < ns; ++i) {
      const std::size_t spr = f.signals[i].samples_per_record;
      for (std::size_t k = 0; k < spr; ++k) {
        const auto v = static_cast<std::uint16_t>(f.samples[i][rec * spr + k]);
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
      }
    }
  }
  return out;
}

Recording parse_edf(std::span<const std::uint8_t> bytes, std::span<const std::string> channels) {
  const EdfFile f = parse_edf_file(bytes);
  std::vector<std::size_t> picks;
  if (channels.empty()) {
    std::size_t ref_spr = 0;
    for (std::size_t i = 0; i < f.signals.size(); ++i) {
      const auto& s = f.signals[i];
      if (s.is_annotation()) {
        log_info("EDF: skipping annotation signal {}", i);
        continue;
      }
      if (ref_spr == 0) ref_spr = s.samples_per_record;
      if (s.samples_per_record == ref_spr) {
        picks.push_back(i);
      } else {
        log_info("EDF: dropping signal '{}' (different sampling rate)", s.label);
      }
    }
  } else {
    for (const auto& name : channels) {
      const auto it = std::find_if(f.signals.begin(), f.signals.end(),
                                   [&](const EdfSignalHeader& s) { return s.label == name; });
      if (it == f.signals.end()) throw ConfigError("EDF: no signal labelled '" + name + "'");
      picks.push_back(static_cast<std::size_t>(it - f.signals.begin()));
    }
    for (auto i : picks) {
      if (f.signals[i].samples_per_record != f.signals[picks.front()].samples_per_record) {
        throw ConfigError("EDF: requested channels have different sampling rates");
      }
    }
  }
  if (picks.empty()) throw ConfigError("EDF: no ordinary signals");
  if (!(f.header.record_duration_s > 0.0)) {
    throw EdfError(EdfError::Kind::NonNumericField, 244, "record duration must be positive");
  }

  Recording rec;
  rec.subject_id = f.header.patient;
  rec.rate_hz = static_cast<double>(f.signals[picks.front()].samples_per_record) / f.header.record_duration_s;
  for (auto i : picks) {
    const auto& s = f.signals[i];
    std::vector<double> phys(f.samples[i].size());
    std::transform(f.samples[i].begin(), f.samples[i].end(), phys.begin(),
                   [&](std::int16_t d) { return s.physical(d); });
    rec.signals.push_back(std::move(phys));
    rec.channel_names.push_back(s.label);
  }
  return rec;
}

EdfFile recording_to_edf(const Recording& rec, double record_duration_s) {
  rec.validate();
  const double spr_exact = rec.rate_hz * record_duration_s;
  const auto spr = static_cast<std::size_t>(std::llround(spr_exact));
  if (spr == 0 || std::abs(spr_exact - static_cast<double>(spr)) > 1e-9) {
    throw ConfigError("EDF export: rate x record duration must be a whole number of samples");
  }
  const std::size_t M = rec.samples();
  const std::size_t records = (M + spr - 1) / spr;

  EdfFile f;
  f.header.patient = rec.subject_id;
  f.header.recording = "synthetic";
  f.header.record_count = static_cast<long>(records);
  f.header.record_duration_s = round_trip(record_duration_s);
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const auto& x = rec.signals[c];
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    double lo = std::floor(*lo_it), hi = std::ceil(*hi_it);
    if (hi - lo < 1.0) {
      lo -= 1.0;
      hi += 1.0;
    }
    EdfSignalHeader s;
    s.label = rec.channel_names[c];
    s.physical_dimension = "uV";
    s.physical_min = round_trip(lo);
    s.physical_max = round_trip(hi);
    s.samples_per_record = spr;
    const double dspan = static_cast<double>(s.digital_max - s.digital_min);
    const double pspan = s.physical_max - s.physical_min;
    auto quantize = [&](double v) {
      const double d = std::round((v - s.physical_min) / pspan * dspan + s.digital_min);
      return static_cast<std::int16_t>(std::clamp(d, static_cast<double>(s.digital_min),
                                                  static_cast<double>(s.digital_max)));
    };
    std::vector<std::int16_t> digital(records * spr, quantize(0.0));
    std::transform(x.begin(), x.end(), digital.begin(), quantize);
    f.signals.push_back(std::move(s));
    f.samples.push_back(std::move(digital));
  }
  return f;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Annotation> parse_hypnogram(std::string_view text) {
  std::vector<Annotation> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = csv::split_line(line, '\t');
    if (fields.size() != 3) {
      throw ConfigError("hypnogram line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    try {
      out.push_back({csv::parse_real(fields[0]), csv::parse_real(fields[1]), fields[2]});
    } catch (const Error& e) {
      throw ConfigError("hypnogram line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string format_hypnogram(std::span<const Annotation> annotations) {
  std::string out;
  for (const auto& a : annotations) {
    out += csv::format_real(a.start_s) + "\t" + csv::format_real(a.duration_s) + "\t" + a.label + "\n";
  }
  return out;
}

}  // namespace tempo::signal
