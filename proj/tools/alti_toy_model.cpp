// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

// Writes a randomly initialised model in the ALTIWGT1 format. Handy for
// trying the CLI without a converted checkpoint.

#include <CLI11.hpp>
#include <iostream>

#include "alti/alti.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a random toy model"};
  std::string out;
  std::uint64_t seed = 1;
  alti::ModelConfig c;
  c.num_encoder_layers = 2;
  c.num_decoder_layers = 2;
  c.num_heads = 2;
  c.model_dim = 16;
  c.ffn_dim = 32;
  c.vocab_size_src = 32;
  c.vocab_size_tgt = 32;
  c.max_positions = 64;
  c.unk_id = 3;
  c.model_id = "toy";
  bool learned = false;
  app.add_option("--output,-o", out, "weight file to write")->required();
  app.add_option("--seed", seed);
  app.add_option("--encoder-layers", c.num_encoder_layers);
  app.add_option("--decoder-layers", c.num_decoder_layers);
  app.add_option("--heads", c.num_heads);
  app.add_option("--dim", c.model_dim);
  app.add_option("--ffn-dim", c.ffn_dim);
  app.add_option("--src-vocab", c.vocab_size_src);
  app.add_option("--tgt-vocab", c.vocab_size_tgt);
  app.add_option("--max-positions", c.max_positions);
  app.add_option("--model-id", c.model_id);
  app.add_flag("--learned-positions", learned);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (learned) c.positional = alti::Positional::learned;
  try {
    c.validate();
    alti::save_model(alti::random_weights<float>(c, seed), out);
  } catch (const std::exception& e) {
    std::cerr << "alti-toy-model: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
