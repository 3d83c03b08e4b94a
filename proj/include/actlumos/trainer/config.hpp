#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actlumos/enhance/enhance.hpp"
#include "actlumos/sampler/sampler.hpp"

namespace actlumos::trainer {

enum class Stage { teacher, ssl, distill };

enum class FusionVariant { dff, static_fusion, dark_only, retinex_only };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);
const char* fusion_variant_name(FusionVariant v);
FusionVariant fusion_variant_from_name(const std::string& name);

struct EncoderSection {
  std::vector<int> channels = {16, 32, 32};
  std::vector<int> temporal_strides = {2, 1, 1};
  std::vector<int> spatial_strides = {2, 2, 2};
};

struct HeadSection {
  int num_layers = 2;
  int num_heads = 4;
  int ff_mult = 4;
};

struct TrainConfig {
  Stage stage = Stage::teacher;
  int epochs = 30;
  double lr = 1e-3;          // desk-scale default; the full-scale setting is 1e-5
  double weight_decay = 1e-4;
  std::string optimizer = "adamw";

  int n_c = 4;   // classes per SupCon batch
  int n_v = 2;   // clips per class
  int b_u = 16;  // SSL batch size
  int b_kd = 16; // distillation batch size

  double tau_supcon = 0.1;
  double tau_ssl = 0.1;
  double tau_kd = 4.0;
  double lambda_sup = 0.1;
  double lambda_ce = 1.0;
  double lambda_kd = 1.0;

  uint64_t seed = 1;
  FusionVariant fusion_variant = FusionVariant::dff;
  sampler::SslVariant ssl_variant = sampler::SslVariant::both;
  bool freeze_encoder = false;  // linear-probe mode for SSL-only students

  EncoderSection encoder;
  HeadSection head;
  sampler::AugmentParams augment;
  enhance::RetinexParams retinex;
};

void validate_config(const TrainConfig& c);

std::string config_to_json(const TrainConfig& c);
TrainConfig config_from_json(const std::string& json_text);

/// Partial override: keys present in the JSON object replace defaults.
TrainConfig config_with_overrides(const TrainConfig& base, const std::string& json_text);

/// SHA-256 of the canonical JSON snapshot; the checkpoint fingerprint.
std::string config_fingerprint(const TrainConfig& c);

}  // namespace actlumos::trainer
