#include "actlumos/trainer/config.hpp"

#include <json.hpp>

#include "actlumos/core/hash.hpp"

namespace actlumos::trainer {

using nlohmann::json;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::teacher: return "teacher";
    case Stage::ssl: return "ssl";
    case Stage::distill: return "distill";
  }
  throw Error("bad stage");
}

Stage stage_from_name(const std::string& name) {
  if (name == "teacher") return Stage::teacher;
  if (name == "ssl") return Stage::ssl;
  if (name == "distill") return Stage::distill;
  throw Error("unknown stage '" + name + "' (expected teacher|ssl|distill)");
}

const char* fusion_variant_name(FusionVariant v) {
  switch (v) {
    case FusionVariant::dff: return "dff";
    case FusionVariant::static_fusion: return "static";
    case FusionVariant::dark_only: return "dark_only";
    case FusionVariant::retinex_only: return "retinex_only";
  }
  throw Error("bad fusion variant");
}

FusionVariant fusion_variant_from_name(const std::string& name) {
  if (name == "dff") return FusionVariant::dff;
  if (name == "static") return FusionVariant::static_fusion;
  if (name == "dark_only") return FusionVariant::dark_only;
  if (name == "retinex_only") return FusionVariant::retinex_only;
  throw Error("unknown fusion variant '" + name + "' (expected dff|static|dark_only|retinex_only)");
}

void validate_config(const TrainConfig& c) {
  if (c.epochs < 1) throw Error("epochs must be positive");
  if (!(c.lr > 0)) throw Error("lr must be positive");
  if (c.weight_decay < 0) throw Error("weight_decay must be nonnegative");
  if (c.optimizer != "adamw") throw Error("unknown optimizer '" + c.optimizer + "'");
  if (c.n_c < 1 || c.n_v < 1 || c.b_u < 1 || c.b_kd < 1) throw Error("batch sizes must be positive");
  if (!(c.tau_supcon > 0 && c.tau_ssl > 0 && c.tau_kd > 0)) throw Error("temperatures must be positive");
  if (c.lambda_sup < 0 || c.lambda_ce < 0 || c.lambda_kd < 0) throw Error("loss weights must be nonnegative");
  if (c.encoder.channels.empty() || c.encoder.channels.size() != c.encoder.temporal_strides.size() ||
      c.encoder.channels.size() != c.encoder.spatial_strides.size())
    throw Error("encoder channels/strides must have equal, nonzero length");
  if (c.head.num_layers < 1 || c.head.num_heads < 1 || c.head.ff_mult < 1)
    throw Error("head config fields must be positive");
  if (c.encoder.channels.back() % c.head.num_heads != 0)
    throw Error("num_heads must divide the final encoder channel count");
  enhance::validate_params(c.retinex);
}

namespace {

json to_json_obj(const TrainConfig& c) {
  json j;
  j["stage"] = stage_name(c.stage);
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["optimizer"] = c.optimizer;
  j["n_c"] = c.n_c;
  j["n_v"] = c.n_v;
  j["b_u"] = c.b_u;
  j["b_kd"] = c.b_kd;
  j["tau_supcon"] = c.tau_supcon;
  j["tau_ssl"] = c.tau_ssl;
  j["tau_kd"] = c.tau_kd;
  j["lambda_sup"] = c.lambda_sup;
  j["lambda_ce"] = c.lambda_ce;
  j["lambda_kd"] = c.lambda_kd;
  j["seed"] = c.seed;
  j["fusion_variant"] = fusion_variant_name(c.fusion_variant);
  j["ssl_variant"] = sampler::ssl_variant_name(c.ssl_variant);
  j["freeze_encoder"] = c.freeze_encoder;
  j["encoder"] = {{"channels", c.encoder.channels},
                  {"temporal_strides", c.encoder.temporal_strides},
                  {"spatial_strides", c.encoder.spatial_strides}};
  j["head"] = {{"num_layers", c.head.num_layers}, {"num_heads", c.head.num_heads}, {"ff_mult", c.head.ff_mult}};
  j["augment"] = {{"crop_scale_lo", c.augment.crop_scale_lo}, {"crop_scale_hi", c.augment.crop_scale_hi},
                  {"flip_prob", c.augment.flip_prob},         {"fast_stride", c.augment.fast_stride},
                  {"slow_stride", c.augment.slow_stride},     {"out_frames", c.augment.out_frames}};
  j["retinex"] = {{"smoothing_radius", c.retinex.smoothing_radius},
                  {"illum_gamma", c.retinex.illum_gamma},
                  {"epsilon", c.retinex.epsilon}};
  return j;
}

void apply_json(TrainConfig& c, const json& j) {
  if (j.contains("stage")) c.stage = stage_from_name(j.at("stage").get<std::string>());
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<std::string>();
  if (j.contains("n_c")) c.n_c = j.at("n_c").get<int>();
  if (j.contains("n_v")) c.n_v = j.at("n_v").get<int>();
  if (j.contains("b_u")) c.b_u = j.at("b_u").get<int>();
  if (j.contains("b_kd")) c.b_kd = j.at("b_kd").get<int>();
  if (j.contains("tau_supcon")) c.tau_supcon = j.at("tau_supcon").get<double>();
  if (j.contains("tau_ssl")) c.tau_ssl = j.at("tau_ssl").get<double>();
  if (j.contains("tau_kd")) c.tau_kd = j.at("tau_kd").get<double>();
  if (j.contains("lambda_sup")) c.lambda_sup = j.at("lambda_sup").get<double>();
  if (j.contains("lambda_ce")) c.lambda_ce = j.at("lambda_ce").get<double>();
  if (j.contains("lambda_kd")) c.lambda_kd = j.at("lambda_kd").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("fusion_variant")) c.fusion_variant = fusion_variant_from_name(j.at("fusion_variant"));
  if (j.contains("ssl_variant")) c.ssl_variant = sampler::ssl_variant_from_name(j.at("ssl_variant"));
  if (j.contains("freeze_encoder")) c.freeze_encoder = j.at("freeze_encoder").get<bool>();
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    if (e.contains("channels")) c.encoder.channels = e.at("channels").get<std::vector<int>>();
    if (e.contains("temporal_strides"))
      c.encoder.temporal_strides = e.at("temporal_strides").get<std::vector<int>>();
    if (e.contains("spatial_strides")) c.encoder.spatial_strides = e.at("spatial_strides").get<std::vector<int>>();
  }
  if (j.contains("head")) {
    const json& h = j.at("head");
    if (h.contains("num_layers")) c.head.num_layers = h.at("num_layers").get<int>();
    if (h.contains("num_heads")) c.head.num_heads = h.at("num_heads").get<int>();
    if (h.contains("ff_mult")) c.head.ff_mult = h.at("ff_mult").get<int>();
  }
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    if (a.contains("crop_scale_lo")) c.augment.crop_scale_lo = a.at("crop_scale_lo").get<double>();
    if (a.contains("crop_scale_hi")) c.augment.crop_scale_hi = a.at("crop_scale_hi").get<double>();
    if (a.contains("flip_prob")) c.augment.flip_prob = a.at("flip_prob").get<double>();
    if (a.contains("fast_stride")) c.augment.fast_stride = a.at("fast_stride").get<int>();
    if (a.contains("slow_stride")) c.augment.slow_stride = a.at("slow_stride").get<int>();
    if (a.contains("out_frames")) c.augment.out_frames = a.at("out_frames").get<int>();
  }
  if (j.contains("retinex")) {
    const json& r = j.at("retinex");
    if (r.contains("smoothing_radius")) c.retinex.smoothing_radius = r.at("smoothing_radius").get<int>();
    if (r.contains("illum_gamma")) c.retinex.illum_gamma = r.at("illum_gamma").get<double>();
    if (r.contains("epsilon")) c.retinex.epsilon = r.at("epsilon").get<double>();
  }
}

}  // namespace

std::string config_to_json(const TrainConfig& c) { return to_json_obj(c).dump(2); }

TrainConfig config_from_json(const std::string& json_text) {
  TrainConfig c;
  try {
    apply_json(c, json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(std::string("bad config JSON: ") + e.what());
  }
  validate_config(c);
  return c;
}

TrainConfig config_with_overrides(const TrainConfig& base, const std::string& json_text) {
  TrainConfig c = base;
  try {
    apply_json(c, json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(std::string("bad config JSON: ") + e.what());
  }
  validate_config(c);
  return c;
}

std::string config_fingerprint(const TrainConfig& c) {
  // nlohmann::json keeps keys sorted, so dump() is canonical
  return sha256_hex(to_json_obj(c).dump());
}

}  // namespace actlumos::trainer
