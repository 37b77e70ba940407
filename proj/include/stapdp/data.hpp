#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace stapdp {

/// Distances from one subject-occasion to every feature within radius R,
/// kept sorted ascending.
class DistanceSet {
 public:
  DistanceSet() = default;
  DistanceSet(std::vector<double> distances, double radius);

  std::span<const double> values() const { return values_; }
  double radius() const { return radius_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

 private:
  std::vector<double> values_;
  double radius_ = 0.0;
};

struct ObservationRow {
  std::string subject_id;
  std::string occasion_id;
  double y = 0.0;
  std::vector<double> x;  // fixed-effect covariates, length p
  std::vector<double> z;  // random-effect covariates, length q
  double weight = 1.0;    // residual variance is sigma^2 / weight
  DistanceSet distances;
};

/// Column layout of the subjects file plus the exposure radius and basis
/// settings used when fitting.
struct Schema {
  char delimiter = ',';
  std::string id_column = "id";
  std::string occasion_column = "occasion";
  std::string outcome_column = "y";
  std::string weight_column = "weight";  // optional in the file; weights default to 1
  std::vector<std::string> x_columns;    // empty: every column prefixed "x_"
  std::vector<std::string> z_columns;    // empty: every column prefixed "z_"
  bool intercept = true;                 // prepend a column of ones to x
  bool random_intercept = false;         // prepend a column of ones to z
  double radius = 1.0;
  int degree = 3;
  int num_basis = 7;
  int penalty_order = 2;
};

Schema parse_schema(const std::string& json_text);
Schema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const Schema& schema);

/// Observations grouped by subject. Rows are kept in a canonical order
/// (subjects by id, then occasion, then row content) so that the order of
/// the input files never changes anything downstream.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<ObservationRow> rows, double radius, std::vector<std::string> x_names,
          std::vector<std::string> z_names);

  const std::vector<ObservationRow>& rows() const { return rows_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_subjects() const { return subject_ids_.size(); }
  std::size_t p() const { return x_names_.size(); }
  std::size_t q() const { return z_names_.size(); }
  double radius() const { return radius_; }

  const std::vector<std::string>& subject_ids() const { return subject_ids_; }
  const std::vector<std::string>& x_names() const { return x_names_; }
  const std::vector<std::string>& z_names() const { return z_names_; }

  // Rows of subject s occupy [subject_begin(s), subject_end(s)).
  std::size_t subject_begin(std::size_t s) const { return offsets_[s]; }
  std::size_t subject_end(std::size_t s) const { return offsets_[s + 1]; }
  // Subject position for an id; throws ErrorKind::input for unknown ids.
  std::size_t subject_position(const std::string& id) const;

 private:
  std::vector<ObservationRow> rows_;
  double radius_ = 0.0;
  std::vector<std::string> x_names_;
  std::vector<std::string> z_names_;
  std::vector<std::string> subject_ids_;
  std::vector<std::size_t> offsets_{0};
  std::unordered_map<std::string, std::size_t> subject_index_;
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_distances = 0;  // distances beyond the radius
};

LoadResult load_dataset(std::istream& subjects, std::istream& distances, const Schema& schema);
LoadResult load_dataset(const std::filesystem::path& subjects, const std::filesystem::path& distances,
                        const Schema& schema);

/// Writes the dataset as a subjects file and a long-format distances file.
/// Returns the schema that reloads it exactly (covariate columns listed
/// explicitly, intercepts already materialized).
Schema write_dataset(const Dataset& dataset, std::ostream& subjects, std::ostream& distances, char delimiter = ',');
Schema write_dataset(const Dataset& dataset, const std::filesystem::path& subjects,
                     const std::filesystem::path& distances, char delimiter = ',');

struct ValidationReport {
  std::size_t subjects = 0;
  std::size_t rows = 0;
  std::size_t features = 0;  // total distances over all rows
  std::size_t empty_rows = 0;
  std::vector<double> histogram_edges;         // bins + 1 edges over [0, R]
  std::vector<std::size_t> histogram_counts;   // bins
  double mean_distance = 0.0;
  double median_distance = 0.0;
  double near_radius = 1.0;
  std::size_t subjects_without_near_features = 0;
  std::vector<std::string> warnings;
};

ValidationReport validate(const Dataset& dataset, double near_radius = 1.0, int bins = 10);
void print_report(std::ostream& out, const ValidationReport& report);

}  // namespace stapdp
