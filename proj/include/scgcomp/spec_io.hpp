#pragma once

#include "scgcomp/gcomp_ice.hpp"
#include "scgcomp/gcomp_standard.hpp"
#include "scgcomp/model_spec.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace scgcomp {

/// Parses a source label: "B:name", "L:name@lag", "A@lag", "A0", "Y@lag", "Y2@lag".
Source parse_source(std::string_view text);

/// Parses factors joined by '*'.
std::vector<Source> parse_factors(std::string_view text);

/// Model specifications read from a JSON file.
///
///   {"outcome": {"terms": ["A@0", "L:L@0*A@0", {"term": "L:age@0", "transform": "rqs"}]},
///    "pseudo": "saturated",
///    "covariates": {"L": {"terms": ["L:L@1", "A@1"]}}}
///
/// A template is a term object, "saturated", or {"saturated": [sources]};
/// {"at_time": {"2": {...}}} adds exact specs per conditioning time.
struct SpecFile
{
    std::optional<SpecTemplate> outcome;
    std::optional<SpecTemplate> pseudo;
    std::map<std::string, SpecTemplate> covariates;
};

SpecFile parse_spec_file(std::string_view json_text);
SpecFile read_spec_file(const std::filesystem::path& path);
std::string spec_file_json(const SpecFile& spec);

/// Main-effects defaults over the readable history.
SpecTemplate main_effects_outcome(const PanelColumns& data);
SpecTemplate main_effects_covariate(const PanelColumns& data, int covariate);

/// Saturated over the history a covariate model may read: no same-time
/// action and no same-time covariate declared at or after `covariate`.
SpecTemplate saturated_covariate(const PanelColumns& data, int covariate);

IceSpecs ice_specs_from(const SpecFile& file, const PanelColumns& data);
StandardSpecs standard_specs_from(const SpecFile& file, const PanelColumns& data);

}  // namespace scgcomp
