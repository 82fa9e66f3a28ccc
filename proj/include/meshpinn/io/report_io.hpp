#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "meshpinn/errors.hpp"
#include "meshpinn/io/mesh_io.hpp"
#include "meshpinn/quality.hpp"
#include "meshpinn/train.hpp"

namespace meshpinn::io {

using nlohmann::json;

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Quality report

inline json report_to_json(const QualityReport& r) {
  json bins = json::array();
  for (std::size_t b = 0; b < r.histogram.size(); ++b) {
    const double lo = static_cast<double>(b) * kHistogramBinWidth;
    const double hi = b + 1 == r.histogram.size() ? 360.0 : lo + kHistogramBinWidth;
    bins.push_back({{"lo", lo}, {"hi", hi}, {"count", r.histogram[b]}});
  }
  return json{{"ni", r.ni},
              {"nj", r.nj},
              {"cells", r.cells},
              {"max_included_angle", r.global_max},
              {"mean_max_included_angle", r.mean_max},
              {"inverted_cells", r.inverted_cells},
              {"nonconvex_cells", r.nonconvex_cells},
              {"degenerate_cells", r.degenerate_cells},
              {"histogram", bins}};
}

inline std::string report_histogram_csv(const QualityReport& r) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < r.histogram.size(); ++b) {
    const double lo = static_cast<double>(b) * kHistogramBinWidth;
    const double hi = b + 1 == r.histogram.size() ? 360.0 : lo + kHistogramBinWidth;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%g,%g,%zu\n", lo, hi, r.histogram[b]);
    out += buf;
  }
  return out;
}

inline std::string report_table(const QualityReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "mesh                    %d x %d (%zu cells)\n", r.ni, r.nj,
                r.cells);
  out += buf;
  std::snprintf(buf, sizeof buf, "max included angle      %.3f deg\n", r.global_max);
  out += buf;
  std::snprintf(buf, sizeof buf, "mean max angle          %.3f deg\n", r.mean_max);
  out += buf;
  std::snprintf(buf, sizeof buf, "inverted cells          %zu\n", r.inverted_cells);
  out += buf;
  std::snprintf(buf, sizeof buf, "non-convex cells        %zu\n", r.nonconvex_cells);
  out += buf;
  std::snprintf(buf, sizeof buf, "degenerate cells        %zu\n", r.degenerate_cells);
  out += buf;
  return out;
}

// ---------------------------------------------------------------------------
// Training log

inline constexpr std::string_view kTrainLogHeader =
    "epoch,stage,lr,lambda1,loss_eqns,loss_bcs_bottom,loss_bcs_top,loss_bcs_left,"
    "loss_bcs_right,loss_data,loss_total\n";

inline std::string train_log_row(const HistoryRecord& rec) {
  const auto& l = rec.loss;
  std::string row = std::to_string(rec.epoch) + "," + std::string(to_string(rec.stage));
  for (double v : {rec.lr, l.lambda1, l.eqns, l.bcs_bottom, l.bcs_top, l.bcs_left, l.bcs_right,
                   l.data, l.total}) {
    row += ',';
    row += format_double(v);
  }
  row += '\n';
  return row;
}

inline std::string train_log_csv(const TrainHistory& h) {
  std::string out(kTrainLogHeader);
  for (const auto& rec : h.records) out += train_log_row(rec);
  return out;
}

}  // namespace meshpinn::io
