#pragma once
// JSON and CSV forms of the toolkit's data types.

#include <json.hpp>

#include "lsfm/forward.hpp"
#include "lsfm/heat_core.hpp"
#include "lsfm/io/csv.hpp"
#include "lsfm/linsys.hpp"
#include "lsfm/phantom.hpp"
#include "lsfm/stability.hpp"

namespace lsfm::io {

using nlohmann::json;

/// Reads dataset parameters from `j` (all fields optional) on top of
/// `base`. Throws ConfigError naming "<prefix>.<field>" for invalid entries.
phantom::DatasetParams dataset_params_from_json(const json& j, phantom::DatasetParams base,
                                                const std::string& prefix = "phantom");
json to_json(const phantom::DatasetParams& p);

/// Parses "a:b:n" (n evenly spaced values), a number, or a JSON array.
std::vector<double> parse_sweep(const json& j, const std::string& field);
std::vector<double> parse_sweep(const std::string& text, const std::string& field);

/// y, then one column per time.
CsvTable field_csv(const heat::SpaceTimeField& f);
json field_sidecar(const heat::SpaceTimeField& f);
CsvTable profile_csv(const heat::Profile1D& p);
json profile_sidecar(const heat::Profile1D& p);

/// i, j, x, y, mu, lambda, psi, a, object.
CsvTable phantom_csv(const phantom::Phantom& p);
json phantom_manifest(const phantom::Phantom& p);

CsvTable sigma_csv(const forward::SigmaProfile& p);
json to_json(const forward::SigmaProfile& p);

/// Rows: illumination index; columns: side, y, then p at each depth.
CsvTable measurement_csv(const forward::MeasurementSet& m);

CsvTable block_csv(const linsys::SystemBlock& b);
json block_manifest(const linsys::SystemBlock& b);

json to_json(const stability::StabilityReport& r);

}  // namespace lsfm::io
