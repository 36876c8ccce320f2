#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ise/error.hpp"
#include "ise/format.hpp"
#include "ise/synthdata.hpp"
#include "ise/trainer.hpp"

namespace ise {

// Dataset dump: a header line "N d", then per sample "sample_id true_id split v_1 ... v_d".

inline void write_dataset(std::ostream& out, const LabeledDataset& ds) {
  const EmbeddingTable& t = ds.embeddings;
  out << t.rows() << ' ' << t.dim() << '\n';
  std::string line;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    line = std::to_string(i) + ' ' + std::to_string(ds.true_ids[i]) + ' ' + std::string(to_string(ds.split[i]));
    for (double x : t.row(i)) {
      line += ' ';
      line += format_double(x);
    }
    line += '\n';
    out << line;
  }
}

inline void write_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot write '" + path + "'");
  write_dataset(out, ds);
}

/// Parses a dump. Rows may appear in any order but must cover sample ids 0..N-1 exactly once.
inline LabeledDataset read_dataset(std::istream& in, std::string_view origin = "dataset") {
  auto fail = [&](std::size_t line, const std::string& m) -> Error {
    return Error(ErrorCode::parse, std::string(origin) + ":" + std::to_string(line) + ": " + m);
  };
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!trim(raw).empty()) break;
  }
  std::istringstream header(raw);
  std::string n_tok, d_tok, extra;
  if (!(header >> n_tok >> d_tok) || (header >> extra)) throw fail(line_no, "expected header 'N d'");
  const auto n = parse_int(n_tok);
  const auto d = parse_int(d_tok);
  if (!n || !d || *n < 0 || *d < 1) throw fail(line_no, "invalid header values");

  LabeledDataset ds;
  ds.embeddings = EmbeddingTable(static_cast<std::size_t>(*n), static_cast<std::size_t>(*d));
  ds.true_ids.assign(static_cast<std::size_t>(*n), -1);
  ds.split.assign(static_cast<std::size_t>(*n), Split::train);
  std::vector<char> seen(static_cast<std::size_t>(*n), 0);
  std::size_t rows = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string s; ls >> s;) tok.push_back(s);
    if (tok.size() != static_cast<std::size_t>(*d) + 3)
      throw fail(line_no, "expected " + std::to_string(*d + 3) + " fields, found " + std::to_string(tok.size()));
    const auto id = parse_int(tok[0]);
    if (!id || *id < 0 || *id >= *n) throw fail(line_no, "sample id out of range");
    const auto idx = static_cast<std::size_t>(*id);
    if (seen[idx]) throw fail(line_no, "duplicate sample id " + tok[0]);
    seen[idx] = 1;
    const auto truth = parse_int(tok[1]);
    if (!truth || *truth < -1) throw fail(line_no, "invalid true id");
    ds.true_ids[idx] = static_cast<int>(*truth);
    if (tok[2] == "TRAIN") ds.split[idx] = Split::train;
    else if (tok[2] == "QUERY") ds.split[idx] = Split::query;
    else if (tok[2] == "GALLERY") ds.split[idx] = Split::gallery;
    else throw fail(line_no, "unknown split '" + tok[2] + "'");
    MutVec row = ds.embeddings.row(idx);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto v = parse_double(tok[3 + j]);
      if (!v || !std::isfinite(*v)) throw fail(line_no, "invalid coordinate '" + tok[3 + j] + "'");
      row[j] = *v;
    }
    ++rows;
  }
  if (rows != static_cast<std::size_t>(*n))
    throw fail(line_no, "expected " + std::to_string(*n) + " rows, found " + std::to_string(rows));
  return ds;
}

inline LabeledDataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot read '" + path + "'");
  return read_dataset(in, path);
}

inline constexpr std::string_view kRunCsvHeader =
    "epoch,clusters,noise,loss_se,loss_lp,fowlkes_mallows,adjusted_rand,adjusted_mutual_info,v_measure,"
    "map,cmc1,cmc5,cmc10,lambda";

inline std::string to_csv_row(const EpochRecord& r) {
  std::string s = std::to_string(r.epoch) + ',' + std::to_string(r.clusters) + ',' + std::to_string(r.noise);
  for (double x : {r.loss_se, r.loss_lp, r.quality.fowlkes_mallows, r.quality.adjusted_rand,
                   r.quality.adjusted_mutual_info, r.quality.v_measure, r.retrieval.map, r.retrieval.cmc[0],
                   r.retrieval.cmc[1], r.retrieval.cmc[2], r.lambda}) {
    s += ',';
    s += format_double(x);
  }
  return s;
}

inline void write_run_csv(std::ostream& out, const std::vector<EpochRecord>& records) {
  out << kRunCsvHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

}  // namespace ise
