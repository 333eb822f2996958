#pragma once

#include "fixtures.hpp"
#include "ivz/io/checkpoint.hpp"
#include "ivz/io/synth.hpp"

namespace ivz::test {

/// A small synthetic data directory with one untrained 20-intent checkpoint ("demo") and one
/// video without annotations ("bare").
struct ServiceData {
  TempDir dir{"ivz_svc"};
  io::Dataset dataset;

  explicit ServiceData(std::uint64_t seed = 5) {
    io::SynthConfig c;
    c.seed = seed;
    c.videos = 3;
    c.shots = 64;
    c.feature_dim = 16;
    c.vocab = 8;
    c.rules = 2;
    dataset = io::write_synth_dataset(dir.path, c);
    model::Model<float> m(model::ModelConfig::compact(c.feature_dim));
    m.init(seed);
    io::save_checkpoint(dir.path / "checkpoints" / "demo.ivzr", m);

    io::VideoRecord bare = dataset.videos[0];
    bare.id = "bare";
    bare.annotations.clear();
    io::save_video(dir.path / "videos", bare);
  }

  const std::string& concept_a() const { return dataset.videos[0].annotations[0].c1; }
  const std::string& concept_b() const { return dataset.videos[0].annotations[0].c2; }
};

}  // namespace ivz::test
