#pragma once

// Molecule dataset I/O.
//
// CSV schema (header required, column order free):
//   id,smiles,inchi,homo_ev[,conf_homo_ev,conf_rel_e]
// InChI strings contain commas, so fields follow RFC 4180 quoting: a field
// containing ',' '"' or a newline is wrapped in double quotes with inner
// quotes doubled.  The optional conformer columns hold ';'-joined float lists
// of equal length (per-conformer HOMO [eV] and relative energy [eV]).
// Floats are written with shortest round-trip formatting, so an export/load
// cycle is bit-exact.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sinet/encoding.hpp"
#include "sinet/errors.hpp"

namespace sinet {

inline constexpr double kBoltzmannEvPerK = 8.617333262e-5;
inline constexpr double kRoomTemperatureK = 298.15;

struct Conformer {
  double homo_ev = 0.0;
  double rel_energy_ev = 0.0;
};

struct MoleculeRecord {
  std::string id;
  std::string smiles;
  std::string inchi;
  double homo_ev = 0.0;
  std::vector<Conformer> conformers;  // empty when the file has no conformer data
};

struct Dataset {
  std::vector<MoleculeRecord> records;
  std::string name;

  std::size_t size() const { return records.size(); }
  std::vector<double> targets() const {
    std::vector<double> y;
    y.reserve(records.size());
    for (const MoleculeRecord& r : records) y.push_back(r.homo_ev);
    return y;
  }
};

struct ColumnMap {
  std::string id = "id";
  std::string smiles = "smiles";
  std::string inchi = "inchi";
  std::string homo = "homo_ev";
  std::string conf_homo = "conf_homo_ev";
  std::string conf_rel = "conf_rel_e";
};

// ---- low-level CSV ----

namespace detail {

// Full RFC 4180 state machine including newlines inside quoted fields.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text,
                                                       const std::string& origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          throw FormatError(origin + ": row " + std::to_string(rows.size() + 1) +
                            ": stray quote inside an unquoted field");
        in_quotes = true;
        field_was_quoted = true;
        ++i;
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        ++i;
        break;
      case '\n':
        end_row();
        ++i;
        break;
      default:
        field.push_back(c);
        ++i;
        break;
    }
  }
  if (in_quotes)
    throw FormatError(origin + ": unterminated quoted field at end of file");
  if (!field.empty() || !row.empty() || field_was_quoted) end_row();
  return rows;
}

inline std::string csv_quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw DataError(where + ": malformed number \"" + std::string(s) + "\"");
  return v;
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& where) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t semi = s.find(';', start);
    if (semi == std::string_view::npos) semi = s.size();
    out.push_back(parse_double(s.substr(start, semi - start), where));
    start = semi + 1;
    if (semi == s.size()) break;
  }
  return out;
}

}  // namespace detail

// Loads a dataset.  `warnings` (optional) collects non-fatal findings such as
// HOMO values outside the plausible donor range.
inline Dataset load_csv(const std::string& path, const ColumnMap& columns = {},
                        std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_csv: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  const auto rows = detail::parse_csv(text, path);
  if (rows.empty()) throw DataError("load_csv: " + path + ": empty file");
  const std::vector<std::string>& header = rows.front();

  auto col_of = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto required = [&](const std::string& name) -> std::size_t {
    const auto c = col_of(name);
    if (!c) throw DataError("load_csv: " + path + ": missing column '" + name + "'");
    return *c;
  };
  const std::size_t id_col = required(columns.id);
  const std::size_t smiles_col = required(columns.smiles);
  const std::size_t inchi_col = required(columns.inchi);
  const std::size_t homo_col = required(columns.homo);
  const auto conf_homo_col = col_of(columns.conf_homo);
  const auto conf_rel_col = col_of(columns.conf_rel);
  if (conf_homo_col.has_value() != conf_rel_col.has_value())
    throw DataError("load_csv: " + path + ": conformer columns '" + columns.conf_homo + "' and '" +
                    columns.conf_rel + "' must appear together");

  Dataset ds;
  ds.name = path;
  // id -> first row seen; duplicates are reported with both row numbers
  // (header is row 1, first data record is row 2).
  std::unordered_map<std::string, std::size_t> first_row;
  std::vector<std::string> duplicate_msgs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::vector<std::string>& row = rows[r];
    const std::size_t rowno = r + 1;
    const std::string where = path + ": row " + std::to_string(rowno);
    if (row.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(row.size()));
    MoleculeRecord rec;
    rec.id = row[id_col];
    if (rec.id.empty()) throw DataError(where + ": empty id");
    rec.smiles = row[smiles_col];
    if (rec.smiles.empty()) throw DataError(where + " id '" + rec.id + "': empty smiles");
    rec.inchi = row[inchi_col];
    if (rec.inchi.rfind("InChI=", 0) != 0)
      throw DataError(where + " id '" + rec.id + "': inchi must start with \"InChI=\", got \"" +
                      rec.inchi + "\"");
    rec.homo_ev = detail::parse_double(row[homo_col], where + " column '" + columns.homo + "'");
    if (!std::isfinite(rec.homo_ev))
      throw DataError(where + " id '" + rec.id + "': non-finite homo_ev");
    if (warnings && (rec.homo_ev <= -10.0 || rec.homo_ev >= 0.0))
      warnings->push_back(where + " id '" + rec.id + "': homo_ev " +
                          detail::format_double(rec.homo_ev) +
                          " outside the typical donor range (-10, 0) eV");
    if (conf_homo_col && !row[*conf_homo_col].empty()) {
      if (row[*conf_rel_col].empty())
        throw DataError(where + " id '" + rec.id + "': conformer energies present but relative "
                        "energies missing");
      const auto homos = detail::parse_double_list(
          row[*conf_homo_col], where + " column '" + columns.conf_homo + "'");
      const auto rels = detail::parse_double_list(row[*conf_rel_col],
                                                  where + " column '" + columns.conf_rel + "'");
      if (homos.size() != rels.size())
        throw DataError(where + " id '" + rec.id + "': " + std::to_string(homos.size()) +
                        " conformer HOMO values vs " + std::to_string(rels.size()) +
                        " relative energies");
      rec.conformers.reserve(homos.size());
      for (std::size_t k = 0; k < homos.size(); ++k)
        rec.conformers.push_back({homos[k], rels[k]});
    } else if (conf_rel_col && !row[*conf_rel_col].empty()) {
      throw DataError(where + " id '" + rec.id + "': conformer relative energies present but "
                      "HOMO values missing");
    }
    const auto [it, inserted] = first_row.emplace(rec.id, rowno);
    if (!inserted)
      duplicate_msgs.push_back("duplicate id \"" + rec.id + "\" at rows " +
                               std::to_string(it->second) + " and " + std::to_string(rowno));
    ds.records.push_back(std::move(rec));
  }
  if (!duplicate_msgs.empty()) {
    std::string msg = "load_csv: " + path + ": ";
    for (std::size_t i = 0; i < duplicate_msgs.size(); ++i) {
      if (i) msg += "; ";
      msg += duplicate_msgs[i];
    }
    throw DataError(msg);
  }
  return ds;
}

inline void export_csv(const Dataset& ds, const std::string& path, const ColumnMap& columns = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_csv: cannot open " + path);
  bool any_conf = false;
  for (const MoleculeRecord& r : ds.records)
    if (!r.conformers.empty()) any_conf = true;
  out << columns.id << ',' << columns.smiles << ',' << columns.inchi << ',' << columns.homo;
  if (any_conf) out << ',' << columns.conf_homo << ',' << columns.conf_rel;
  out << '\n';
  for (const MoleculeRecord& r : ds.records) {
    out << detail::csv_quote(r.id) << ',' << detail::csv_quote(r.smiles) << ','
        << detail::csv_quote(r.inchi) << ',' << detail::format_double(r.homo_ev);
    if (any_conf) {
      std::string homos, rels;
      for (std::size_t k = 0; k < r.conformers.size(); ++k) {
        if (k) {
          homos += ';';
          rels += ';';
        }
        homos += detail::format_double(r.conformers[k].homo_ev);
        rels += detail::format_double(r.conformers[k].rel_energy_ev);
      }
      out << ',' << homos << ',' << rels;
    }
    out << '\n';
  }
  if (!out) throw IoError("export_csv: write failed for " + path);
}

// ---- Boltzmann-weighted conformer averaging ----

// weight_i = exp(-dE_i / kT) / sum_j exp(-dE_j / kT), computed with the
// minimum relative energy shifted out of the exponent for stability.
inline double boltzmann_average(std::span<const Conformer> conformers, double temperature_k) {
  if (conformers.empty()) throw DataError("boltzmann_average: empty conformer list");
  if (!(temperature_k > 0.0) || !std::isfinite(temperature_k))
    throw NumericError("boltzmann_average: temperature must be positive and finite, got " +
                       detail::format_double(temperature_k));
  double emin = conformers[0].rel_energy_ev;
  for (const Conformer& c : conformers) {
    if (!std::isfinite(c.rel_energy_ev) || !std::isfinite(c.homo_ev))
      throw NumericError("boltzmann_average: non-finite conformer value");
    emin = std::min(emin, c.rel_energy_ev);
  }
  const double kt = kBoltzmannEvPerK * temperature_k;
  double wsum = 0.0;
  double acc = 0.0;
  for (const Conformer& c : conformers) {
    const double w = std::exp(-(c.rel_energy_ev - emin) / kt);
    wsum += w;
    acc += w * c.homo_ev;
  }
  return acc / wsum;
}

// Replaces homo_ev with the Boltzmann average for every record that carries
// conformer data; records without conformers keep their value.
inline Dataset with_boltzmann_homo(Dataset ds, double temperature_k = kRoomTemperatureK) {
  for (MoleculeRecord& r : ds.records)
    if (!r.conformers.empty()) r.homo_ev = boltzmann_average(r.conformers, temperature_k);
  return ds;
}

// ---- dataset summary ----

struct FieldStats {
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::map<std::size_t, std::size_t> length_histogram;
  std::size_t charset_size = 0;
};

struct DatasetStats {
  std::size_t count = 0;
  double homo_min = 0.0, homo_max = 0.0, homo_mean = 0.0, homo_stdev = 0.0;
  FieldStats smiles;
  FieldStats inchi;
};

namespace detail {
inline FieldStats field_stats(const Dataset& ds, std::string MoleculeRecord::*field) {
  FieldStats fs;
  bool seen[256] = {};
  fs.min_len = static_cast<std::size_t>(-1);
  for (const MoleculeRecord& r : ds.records) {
    const std::string& s = r.*field;
    fs.min_len = std::min(fs.min_len, s.size());
    fs.max_len = std::max(fs.max_len, s.size());
    ++fs.length_histogram[s.size()];
    for (const char c : s) seen[static_cast<unsigned char>(c)] = true;
  }
  for (int c = 0; c < 256; ++c)
    if (seen[c]) ++fs.charset_size;
  return fs;
}
}  // namespace detail

inline DatasetStats dataset_stats(const Dataset& ds) {
  if (ds.records.empty()) throw DataError("dataset_stats: empty dataset");
  DatasetStats st;
  st.count = ds.records.size();
  double sum = 0.0;
  st.homo_min = ds.records[0].homo_ev;
  st.homo_max = ds.records[0].homo_ev;
  for (const MoleculeRecord& r : ds.records) {
    sum += r.homo_ev;
    st.homo_min = std::min(st.homo_min, r.homo_ev);
    st.homo_max = std::max(st.homo_max, r.homo_ev);
  }
  st.homo_mean = sum / static_cast<double>(st.count);
  double ss = 0.0;
  for (const MoleculeRecord& r : ds.records) {
    const double d = r.homo_ev - st.homo_mean;
    ss += d * d;
  }
  st.homo_stdev = std::sqrt(ss / static_cast<double>(st.count));  // population: 1 record -> 0
  st.smiles = detail::field_stats(ds, &MoleculeRecord::smiles);
  st.inchi = detail::field_stats(ds, &MoleculeRecord::inchi);
  return st;
}

}  // namespace sinet
