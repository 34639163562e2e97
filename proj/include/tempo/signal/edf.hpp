#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempo/common/error.hpp"
#include "tempo/signal/recording.hpp"

namespace tempo::signal {

/// Parse failure with the byte offset of the offending field.
class EdfError : public Error {
 public:
  enum class Kind { HeaderLength, NonNumericField, DigitalRange, TruncatedRecord, Discontinuous };

  EdfError(Kind kind, std::size_t offset, const std::string& detail);

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefiltering;
  std::size_t samples_per_record = 0;
  std::string reserved;

  bool is_annotation() const;
  double physical(std::int16_t digital) const;
};

struct EdfHeader {
  std::string version = "0";
  std::string patient;
  std::string recording;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";
  std::string reserved;
  long record_count = 0;
  double record_duration_s = 1.0;
};

/// Classic continuous-record EDF, digital samples kept verbatim per signal.
struct EdfFile {
  EdfHeader header;
  std::vector<EdfSignalHeader> signals;
  std::vector<std::vector<std::int16_t>> samples;  // per signal, record_count * samples_per_record
};

EdfFile parse_edf_file(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_edf_file(const EdfFile& file);

/// Physical-unit recording from the ordinary signals of an EDF stream. With an
/// empty channel list every signal sharing the first signal's rate is kept;
/// signals at other rates and annotation signals are dropped with a log line.
Recording parse_edf(std::span<const std::uint8_t> bytes, std::span<const std::string> channels = {});

/// Quantizes a recording to 16-bit EDF. Physical ranges are the per-channel
/// extrema, rounded to what fits the 8-character header fields. The last
/// record is padded with the digital value closest to zero when M is not a
/// multiple of the record length.
EdfFile recording_to_edf(const Recording& rec, double record_duration_s = 1.0);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Hypnogram sidecar: one `start_s<TAB>duration_s<TAB>label` line per interval.
std::vector<Annotation> parse_hypnogram(std::string_view text);
std::string format_hypnogram(std::span<const Annotation> annotations);

}  // namespace tempo::signal
