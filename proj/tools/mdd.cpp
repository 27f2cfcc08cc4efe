#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mdd/commands.hpp"
#include "mdd/errors.hpp"

namespace {

// Writes to a sibling temporary and renames it into place, so the target is complete or absent.
bool write_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      return false;
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perpetual maximum-drawdown option pricer"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override mc.seed");
  app.add_option("--out", out_path, "output file (stdout when omitted)");

  using Cmd = std::string (*)(const mdd::RunConfig&);
  struct Entry {
    const char* name;
    const char* help;
    Cmd fn;
  };
  const Entry entries[] = {
      {"price", "value at state0 with a diagnostics summary", &mdd::cmd_price},
      {"boundary", "boundary table: s, y, b, region_index, constraint_margin", &mdd::cmd_boundary},
      {"gstar", "limiting corner slope g*", &mdd::cmd_gstar},
      {"verify", "free-boundary residual reports", &mdd::cmd_verify},
      {"mc-check", "Monte Carlo price under the computed boundary", &mdd::cmd_mc_check},
  };
  Cmd chosen = nullptr;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->fallthrough();
    sub->callback([&chosen, fn = e.fn] { chosen = fn; });
  }
  CLI11_PARSE(app, argc, argv);

  std::string hash;
  std::string doc;
  int code = 0;
  try {
    const auto cfg = mdd::load_config(config_path, seed);
    hash = cfg.hash_hex();
    doc = chosen(cfg);
  } catch (const mdd::Error& e) {
    doc = mdd::error_document(std::string(mdd::to_string(e.code())), e.what(), hash);
    code = e.code() == mdd::ErrorCode::ConfigError ? 3 : 2;
  } catch (const std::exception& e) {
    doc = mdd::error_document("Internal", e.what(), hash);
    code = 4;
  }
  if (code != 0) {
    // Errors never create the output file.
    (out_path.empty() ? std::cout : std::cerr) << doc;
    return code;
  }
  if (out_path.empty()) {
    std::cout << doc;
    std::cout.flush();
    return std::cout ? 0 : 5;
  }
  if (!write_atomic(out_path, doc)) {
    std::cerr << mdd::error_document("IOError", "cannot write '" + out_path + "'", hash);
    return 5;
  }
  return 0;
}
