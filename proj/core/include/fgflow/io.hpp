#pragma once

#include "fgflow/flow.hpp"
#include "fgflow/lifting.hpp"
#include "fgflow/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fgflow {

/// Datasets are CSV with a `label,f0,f1,...` header or newline-delimited JSON
/// records {"label": <string>, "x": [...]}; the format is sniffed from the
/// first non-blank character. Parse errors carry line numbers.
LabeledDataset read_dataset(std::istream& is);
LabeledDataset read_dataset_file(const std::string& path);

/// Measures are newline-delimited JSON records
/// {"x": [...], "mu": [...], "sigma": [[...]], "label": <optional>}.
void write_measure(std::ostream& os, const EmpiricalMeasure& measure);
void write_measure_file(const std::string& path, const EmpiricalMeasure& measure);
EmpiricalMeasure read_measure(std::istream& is);
EmpiricalMeasure read_measure_file(const std::string& path);

void write_moments(std::ostream& os, const ClassMoments& moments);
void write_moments_file(const std::string& path, const ClassMoments& moments);
ClassMoments read_moments(std::istream& is);
ClassMoments read_moments_file(const std::string& path);

/// `index,label` rows.
void write_labels_csv(std::ostream& os, const std::vector<std::string>& labels);
void write_labels_csv_file(const std::string& path, const std::vector<std::string>& labels);

void write_trace_csv_file(const std::string& path, const FlowTrace& trace);

}  // namespace fgflow
