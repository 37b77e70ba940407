#include "stapdp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "stapdp/errors.hpp"
#include "stapdp/table.hpp"

namespace stapdp {

namespace {

using json = nlohmann::json;

constexpr const char* kInterceptName = "intercept";
constexpr const char* kRandomInterceptName = "re_intercept";

// Numeric-aware ordering: ids that both parse as integers compare by value.
bool id_less(const std::string& a, const std::string& b) {
  long long va = 0;
  long long vb = 0;
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), va);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), vb);
  const bool na = ra.ec == std::errc() && ra.ptr == a.data() + a.size();
  const bool nb = rb.ec == std::errc() && rb.ptr == b.data() + b.size();
  if (na && nb && va != vb) return va < vb;
  if (na != nb) return na;
  return a < b;
}

bool row_less(const ObservationRow& a, const ObservationRow& b) {
  if (a.subject_id != b.subject_id) return id_less(a.subject_id, b.subject_id);
  if (a.occasion_id != b.occasion_id) return id_less(a.occasion_id, b.occasion_id);
  return std::tie(a.y, a.weight, a.x, a.z) < std::tie(b.y, b.weight, b.x, b.z);
}

std::vector<std::string> prefixed_columns(const Table& table, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& h : table.header) {
    if (h.rfind(prefix, 0) == 0) out.push_back(h);
  }
  return out;
}

std::string list_offenders(const std::vector<std::string>& items) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(items.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i > 0) out += ", ";
    out += items[i];
  }
  if (items.size() > shown) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

}  // namespace

DistanceSet::DistanceSet(std::vector<double> distances, double radius) : values_(std::move(distances)), radius_(radius) {
  for (double d : values_) {
    if (!(d >= 0.0 && d <= radius)) {
      fail(ErrorKind::domain, "distance " + format_number(d) + " outside [0, " + format_number(radius) + "]");
    }
  }
  std::sort(values_.begin(), values_.end());
}

Schema parse_schema(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("schema is not valid JSON: ") + e.what());
  }
  Schema s;
  try {
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t" || d == "tab") {
        s.delimiter = '\t';
      } else if (d.size() == 1) {
        s.delimiter = d[0];
      } else {
        fail(ErrorKind::input, "schema delimiter must be a single character");
      }
    }
    s.id_column = j.value("id", s.id_column);
    s.occasion_column = j.value("occasion", s.occasion_column);
    s.outcome_column = j.value("outcome", s.outcome_column);
    s.weight_column = j.value("weight", s.weight_column);
    s.x_columns = j.value("x", s.x_columns);
    s.z_columns = j.value("z", s.z_columns);
    s.intercept = j.value("intercept", s.intercept);
    s.random_intercept = j.value("random_intercept", s.random_intercept);
    s.radius = j.value("radius", s.radius);
    if (j.contains("basis")) {
      const auto& b = j.at("basis");
      s.degree = b.value("degree", s.degree);
      s.num_basis = b.value("num_basis", s.num_basis);
      s.penalty_order = b.value("penalty_order", s.penalty_order);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("schema field has the wrong type: ") + e.what());
  }
  if (!(s.radius > 0.0)) fail(ErrorKind::input, "schema radius must be positive");
  return s;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open schema " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string schema_to_json(const Schema& s) {
  json j;
  j["delimiter"] = s.delimiter == '\t' ? std::string("\\t") : std::string(1, s.delimiter);
  j["id"] = s.id_column;
  j["occasion"] = s.occasion_column;
  j["outcome"] = s.outcome_column;
  j["weight"] = s.weight_column;
  j["x"] = s.x_columns;
  j["z"] = s.z_columns;
  j["intercept"] = s.intercept;
  j["random_intercept"] = s.random_intercept;
  j["radius"] = s.radius;
  j["basis"] = {{"degree", s.degree}, {"num_basis", s.num_basis}, {"penalty_order", s.penalty_order}};
  return j.dump(2);
}

Dataset::Dataset(std::vector<ObservationRow> rows, double radius, std::vector<std::string> x_names,
                 std::vector<std::string> z_names)
    : rows_(std::move(rows)), radius_(radius), x_names_(std::move(x_names)), z_names_(std::move(z_names)) {
  if (!(radius_ > 0.0)) fail(ErrorKind::input, "exposure radius must be positive");
  for (const auto& r : rows_) {
    if (!std::isfinite(r.y)) fail(ErrorKind::input, "subject " + r.subject_id + ": outcome is not finite");
    if (!(r.weight > 0.0) || !std::isfinite(r.weight)) {
      fail(ErrorKind::input, "subject " + r.subject_id + ": weight must be positive");
    }
    if (r.x.size() != x_names_.size() || r.z.size() != z_names_.size()) {
      fail(ErrorKind::input, "subject " + r.subject_id + ": covariate length mismatch");
    }
    for (double d : r.distances.values()) {
      if (!(d >= 0.0 && d <= radius_)) fail(ErrorKind::domain, "subject " + r.subject_id + ": distance beyond radius");
    }
  }
  std::stable_sort(rows_.begin(), rows_.end(), row_less);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i == 0 || rows_[i].subject_id != rows_[i - 1].subject_id) {
      if (i > 0) offsets_.push_back(i);
      subject_index_.emplace(rows_[i].subject_id, subject_ids_.size());
      subject_ids_.push_back(rows_[i].subject_id);
    }
  }
  if (!rows_.empty()) offsets_.push_back(rows_.size());
}

std::size_t Dataset::subject_position(const std::string& id) const {
  const auto it = subject_index_.find(id);
  if (it == subject_index_.end()) fail(ErrorKind::input, "unknown subject id '" + id + "'");
  return it->second;
}

LoadResult load_dataset(std::istream& subjects_in, std::istream& distances_in, const Schema& schema) {
  const Table subjects = read_table(subjects_in, schema.delimiter, "subjects file");
  const Table distances = read_table(distances_in, schema.delimiter, "distances file");

  const int id_col = subjects.require_column(schema.id_column, "subjects file");
  const int occ_col = subjects.require_column(schema.occasion_column, "subjects file");
  const int y_col = subjects.require_column(schema.outcome_column, "subjects file");
  const int w_col = subjects.column(schema.weight_column);

  std::vector<std::string> x_cols = schema.x_columns.empty() ? prefixed_columns(subjects, "x_") : schema.x_columns;
  std::vector<std::string> z_cols = schema.z_columns.empty() ? prefixed_columns(subjects, "z_") : schema.z_columns;
  std::vector<int> x_idx;
  std::vector<int> z_idx;
  for (const auto& c : x_cols) x_idx.push_back(subjects.require_column(c, "subjects file"));
  for (const auto& c : z_cols) z_idx.push_back(subjects.require_column(c, "subjects file"));

  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
  if (schema.intercept) x_names.emplace_back(kInterceptName);
  x_names.insert(x_names.end(), x_cols.begin(), x_cols.end());
  if (schema.random_intercept) z_names.emplace_back(kRandomInterceptName);
  z_names.insert(z_names.end(), z_cols.begin(), z_cols.end());

  std::vector<ObservationRow> rows;
  rows.reserve(subjects.rows.size());
  std::vector<std::string> bad_outcomes;
  std::vector<std::string> bad_weights;
  for (std::size_t i = 0; i < subjects.rows.size(); ++i) {
    const auto& f = subjects.rows[i];
    const std::string where = "subjects file row " + std::to_string(i + 1);
    ObservationRow row;
    row.subject_id = f[id_col];
    row.occasion_id = f[occ_col];
    if (row.subject_id.empty()) fail(ErrorKind::input, where + ": empty subject id");
    try {
      row.y = parse_number(f[y_col], where);
      if (!std::isfinite(row.y)) throw Error(ErrorKind::input, "not finite");
    } catch (const Error&) {
      bad_outcomes.push_back(row.subject_id + "/" + row.occasion_id + " ('" + f[y_col] + "')");
      continue;
    }
    if (w_col >= 0) {
      row.weight = parse_number(f[w_col], where);
      if (!(row.weight > 0.0) || !std::isfinite(row.weight)) {
        bad_weights.push_back(row.subject_id + "/" + row.occasion_id + " (" + f[w_col] + ")");
        continue;
      }
    }
    if (schema.intercept) row.x.push_back(1.0);
    for (int c : x_idx) row.x.push_back(parse_number(f[c], where));
    if (schema.random_intercept) row.z.push_back(1.0);
    for (int c : z_idx) row.z.push_back(parse_number(f[c], where));
    rows.push_back(std::move(row));
  }
  if (!bad_outcomes.empty()) fail(ErrorKind::input, "non-numeric outcome for " + list_offenders(bad_outcomes));
  if (!bad_weights.empty()) fail(ErrorKind::input, "nonpositive weight for " + list_offenders(bad_weights));

  const int d_id = distances.require_column(schema.id_column, "distances file");
  const int d_occ = distances.require_column(schema.occasion_column, "distances file");
  const int d_dist = distances.require_column("distance", "distances file");

  std::map<std::pair<std::string, std::string>, std::vector<double>> by_key;
  for (const auto& r : rows) by_key.try_emplace({r.subject_id, r.occasion_id});

  LoadResult result;
  std::vector<std::string> unmatched;
  for (std::size_t i = 0; i < distances.rows.size(); ++i) {
    const auto& f = distances.rows[i];
    const double d = parse_number(f[d_dist], "distances file row " + std::to_string(i + 1));
    if (!(d >= 0.0) || !std::isfinite(d)) {
      fail(ErrorKind::input, "distances file row " + std::to_string(i + 1) + ": distance must be finite and nonnegative");
    }
    auto it = by_key.find({f[d_id], f[d_occ]});
    if (it == by_key.end()) {
      unmatched.push_back(f[d_id] + "/" + f[d_occ]);
      continue;
    }
    if (d > schema.radius) {
      ++result.dropped_distances;
      continue;
    }
    it->second.push_back(d);
  }
  if (!unmatched.empty()) {
    std::sort(unmatched.begin(), unmatched.end());
    unmatched.erase(std::unique(unmatched.begin(), unmatched.end()), unmatched.end());
    fail(ErrorKind::input, "distance rows without a matching subject/occasion: " + list_offenders(unmatched));
  }
  for (auto& r : rows) r.distances = DistanceSet(by_key.at({r.subject_id, r.occasion_id}), schema.radius);

  result.dataset = Dataset(std::move(rows), schema.radius, std::move(x_names), std::move(z_names));
  return result;
}

LoadResult load_dataset(const std::filesystem::path& subjects, const std::filesystem::path& distances,
                        const Schema& schema) {
  std::ifstream s(subjects);
  if (!s) fail(ErrorKind::input, "cannot open subjects file " + subjects.string());
  std::ifstream d(distances);
  if (!d) fail(ErrorKind::input, "cannot open distances file " + distances.string());
  return load_dataset(s, d, schema);
}

Schema write_dataset(const Dataset& dataset, std::ostream& subjects_out, std::ostream& distances_out, char delimiter) {
  Schema schema;
  schema.delimiter = delimiter;
  schema.intercept = false;
  schema.random_intercept = false;
  schema.radius = dataset.radius();
  Table subjects;
  subjects.header = {"id", "occasion", "y", "weight"};
  auto add_column = [&subjects](const std::string& name) {
    if (subjects.column(name) >= 0) fail(ErrorKind::input, "covariate name '" + name + "' collides with another column");
    subjects.header.push_back(name);
  };
  for (const auto& n : dataset.x_names()) {
    add_column(n);
    schema.x_columns.push_back(n);
  }
  for (const auto& n : dataset.z_names()) {
    add_column(n);
    schema.z_columns.push_back(n);
  }
  Table distances;
  distances.header = {"id", "occasion", "distance"};
  std::map<std::pair<std::string, std::string>, bool> written;
  for (const auto& r : dataset.rows()) {
    std::vector<std::string> fields{r.subject_id, r.occasion_id, format_number(r.y), format_number(r.weight)};
    for (double v : r.x) fields.push_back(format_number(v));
    for (double v : r.z) fields.push_back(format_number(v));
    subjects.rows.push_back(std::move(fields));
    // Rows sharing a subject/occasion share one distance set.
    if (written.emplace(std::make_pair(r.subject_id, r.occasion_id), true).second) {
      for (double d : r.distances.values()) distances.rows.push_back({r.subject_id, r.occasion_id, format_number(d)});
    }
  }
  write_table(subjects_out, subjects, delimiter);
  write_table(distances_out, distances, delimiter);
  return schema;
}

Schema write_dataset(const Dataset& dataset, const std::filesystem::path& subjects,
                     const std::filesystem::path& distances, char delimiter) {
  std::ofstream s(subjects);
  std::ofstream d(distances);
  if (!s || !d) fail(ErrorKind::input, "cannot write dataset files");
  return write_dataset(dataset, s, d, delimiter);
}

ValidationReport validate(const Dataset& dataset, double near_radius, int bins) {
  ValidationReport report;
  report.subjects = dataset.num_subjects();
  report.rows = dataset.num_rows();
  report.near_radius = near_radius;
  bins = std::max(bins, 1);
  const double radius = dataset.radius();
  for (int b = 0; b <= bins; ++b) report.histogram_edges.push_back(radius * b / bins);
  report.histogram_counts.assign(static_cast<std::size_t>(bins), 0);

  std::vector<double> all;
  for (std::size_t s = 0; s < dataset.num_subjects(); ++s) {
    bool has_near = false;
    for (std::size_t r = dataset.subject_begin(s); r < dataset.subject_end(s); ++r) {
      const auto& row = dataset.rows()[r];
      if (row.distances.empty()) ++report.empty_rows;
      for (double d : row.distances.values()) {
        all.push_back(d);
        if (d <= near_radius) has_near = true;
        auto bin = static_cast<std::size_t>(d / radius * bins);
        report.histogram_counts[std::min(bin, static_cast<std::size_t>(bins - 1))]++;
      }
    }
    if (!has_near) ++report.subjects_without_near_features;
  }
  report.features = all.size();
  if (all.empty()) {
    report.warnings.emplace_back("no exposure information: every distance set is empty");
    return report;
  }
  report.mean_distance = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  std::sort(all.begin(), all.end());
  const std::size_t mid = all.size() / 2;
  report.median_distance = all.size() % 2 == 1 ? all[mid] : 0.5 * (all[mid - 1] + all[mid]);
  if (report.empty_rows * 2 > report.rows) {
    report.warnings.emplace_back("more than half of the rows have no features within the radius");
  }
  if (report.subjects_without_near_features * 2 > report.subjects) {
    report.warnings.emplace_back("more than half of the subjects have no feature within " + format_number(near_radius) +
                                 "; cluster differences near zero distance may be undetectable");
  }
  return report;
}

void print_report(std::ostream& out, const ValidationReport& report) {
  out << "subjects: " << report.subjects << "\nrows: " << report.rows << "\nfeatures: " << report.features
      << "\nempty rows: " << report.empty_rows << "\nmean distance: " << format_number(report.mean_distance)
      << "\nmedian distance: " << format_number(report.median_distance) << "\nsubjects without features within "
      << format_number(report.near_radius) << ": " << report.subjects_without_near_features << "\nhistogram:\n";
  for (std::size_t b = 0; b < report.histogram_counts.size(); ++b) {
    out << "  [" << format_number(report.histogram_edges[b]) << ", " << format_number(report.histogram_edges[b + 1])
        << "): " << report.histogram_counts[b] << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
}

}  // namespace stapdp
