#pragma once

#include <filesystem>

#include <json.hpp>

#include "mvstdm/sampler.hpp"

namespace mvstdm {

/// Writes a draw directory:
///   tau2.csv        chain,iter,i,value
///   sigma2.csv      chain,iter,t,i,value
///   transition.csv  chain,iter,i,j,k,value   (only when A was estimated)
///   states.csv      chain,iter,t,row,value   (only when states were stored)
///   manifest.json   dimensions, per-chain seed/timing/warnings, plus `run`
/// Values are printed at 17 significant digits, so a reload is exact.
void save_draws(const std::filesystem::path& dir, const PosteriorDraws& draws,
                const nlohmann::json& run = nlohmann::json::object());

PosteriorDraws load_draws(const std::filesystem::path& dir);
nlohmann::json load_draws_manifest(const std::filesystem::path& dir);

}  // namespace mvstdm
