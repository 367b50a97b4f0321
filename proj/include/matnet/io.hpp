#pragma once

#include <filesystem>

#include "matnet/dataset.hpp"
#include "matnet/materials.hpp"
#include "matnet/network.hpp"
#include "matnet/solvers.hpp"
#include "matnet/training.hpp"

namespace matnet {

// File formats (all carry format_version = 1):
//   model.json    canonical field order:
//                 format_version, model_type, depth, voigt_order,
//                 [euler_convention,] z, angles | theta, phi.
//                 "angles" is a flat array of (alpha, beta, gamma) triplets
//                 in heap order; theta/phi cover parents in heap order.
//   dataset.csv   "format_version,1" line, a header line, then one row per
//                 sample: sample_id followed by the 21 upper-triangle
//                 entries of each of the three matrices.
//   history.csv   "format_version,1", header
//                 epoch,train_loss,val_loss,e_C,lr with e_C evaluated on
//                 the validation split.

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path); // throws FormatError

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path); // re-verifies PSD

void save_history(const TrainHistory& history, const std::filesystem::path& path);
TrainHistory load_history(const std::filesystem::path& path);

/// Prediction trace: step, eps_macro(6), sig_macro(6), iterations,
/// active_nodes, elapsed_ns.
void save_path_csv(const PathResult& path_result, const std::filesystem::path& path);

std::string material_to_json(const PhaseMaterials& materials);
PhaseMaterials material_from_json(const std::string& text);

std::string preset_to_json(const CompositePreset& preset);
CompositePreset preset_from_json(const std::string& text);
CompositePreset load_preset(const std::filesystem::path& path);

} // namespace matnet
