// Writes, inspects and checks backbone weight archives.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "senti/backbone.hpp"
#include "senti/error.hpp"
#include "senti/image.hpp"
#include "senti/weights.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Backbone weight archive utility", "senti-weights"};
  app.require_subcommand(1);

  std::string backbone = "densenet121";
  std::string path;
  std::string image;
  std::string out;
  std::uint64_t seed = 0;
  auto backbone_option = [&](CLI::App* cmd) {
    cmd->add_option("--backbone", backbone, "densenet121 or vgg19")
        ->check(CLI::IsMember({"densenet121", "vgg19"}))
        ->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Write deterministic seeded stand-in weights");
  backbone_option(synth);
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", path, "Archive path")->required();

  auto* manifest = app.add_subcommand("manifest", "Print the expected key manifest");
  backbone_option(manifest);

  auto* verify = app.add_subcommand("verify", "Load an archive and report the tap channels");
  backbone_option(verify);
  verify->add_option("--weights", path, "Archive path")->required();

  // Dumps the five tap activations of one image, for comparison against a
  // reference implementation of the same network.
  auto* probe = app.add_subcommand("probe", "Write tap activations of an image as an archive");
  backbone_option(probe);
  probe->add_option("--weights", path, "Archive path")->required();
  probe->add_option("--image", image, "Input image")->required();
  probe->add_option("--out", out, "Output archive (keys f1..f5, shape [C, H, W])")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const senti::BackboneId id = senti::parse_backbone(backbone);
    if (synth->parsed()) {
      senti::write_weight_archive(senti::synthesize_weights(id, seed), path);
      std::cout << path << "\n";
    } else if (manifest->parsed()) {
      std::cout << senti::format_weight_manifest(id);
    } else if (verify->parsed()) {
      const auto net = senti::load_backbone<float>(senti::BackboneSpec::defaults(id), path);
      const auto& spec = net.spec();
      const auto channels = net.tap_channels();
      for (int i = 0; i < senti::kTapCount; ++i)
        std::cout << "f" << i + 1 << " " << spec.tap_names[i] << " " << channels[i] << "\n";
    } else if (probe->parsed()) {
      const auto net = senti::load_backbone<float>(senti::BackboneSpec::defaults(id), path);
      const auto features = senti::extract_features(net, senti::load_image(image));
      senti::WeightArchive dump;
      for (int i = 0; i < senti::kTapCount; ++i) {
        const auto& level = features.levels[i];
        dump.tensors["f" + std::to_string(i + 1)] = {{level.channels(), level.height(), level.width()},
                                                     {level.data(), level.data() + level.size()}};
      }
      dump.metadata["backbone"] = backbone;
      senti::write_weight_archive(dump, out);
      std::cout << out << "\n";
    }
  } catch (const senti::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
