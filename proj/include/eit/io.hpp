#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eit/bayes.hpp"
#include "eit/harness.hpp"

namespace eit {

/* Measurement round trip. Layout: '#'-prefixed header (electrode geometry,
   covariance scale, free-form "meta key=value" lines), then sections
   "currents" and "voltages" with one row per electrode and one column per
   pattern, plus a dense "gamma" section when the covariance is not a multiple
   of the identity. All numbers are %.17g, so files round-trip bit-exactly. */
void write_measurements(const MeasurementSet& data, std::ostream& os);
MeasurementSet read_measurements(std::istream& is);
void save_measurements(const MeasurementSet& data, const std::string& path);
MeasurementSet load_measurements(const std::string& path);

/* Grid fields as CSV, one row per kept cell center in grid order. */
void write_posterior_csv(const PosteriorEstimate& estimate, std::ostream& os);
void write_grid_csv(const Grid& grid, const Eigen::VectorXd& values, std::ostream& os);

/* ASCII graymap of a grid field. gray = round(255 * (v - min) / (max - min)),
   the range is recorded in a comment, cells outside the disk render as 0. */
void write_pgm(const Grid& grid, const Eigen::VectorXd& values, std::ostream& os);

/* Convergence-study artifacts. rms.csv carries only seed-determined values so
   reruns are byte-identical; wall-clock times go to the timing file. */
void write_rms_csv(const ConvergenceStudy& study, std::ostream& os);
void write_timing(const ConvergenceStudy& study, std::ostream& os);
void write_fits(std::span<const ConvergenceStudy> studies, std::ostream& os);
void write_gnuplot_script(std::span<const ConvergenceStudy> studies,
                          std::span<const std::string> csv_names, std::ostream& os);

/* Throws ConfigError when the destination cannot be written. */
void write_text_file(const std::string& path, const std::string& content);
std::uint64_t hash_file(const std::string& path);
/* dir/manifest.txt: "<fnv1a64 hex>  <name>" per listed file, sorted. */
void write_manifest(const std::string& dir, std::vector<std::string> names);

}  // namespace eit
