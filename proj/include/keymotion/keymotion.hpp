#pragma once

#include "keymotion/conditioning.hpp"
#include "keymotion/errors.hpp"
#include "keymotion/evaluation.hpp"
#include "keymotion/gradcheck.hpp"
#include "keymotion/io.hpp"
#include "keymotion/model.hpp"
#include "keymotion/motion.hpp"
#include "keymotion/music.hpp"
#include "keymotion/nn.hpp"
#include "keymotion/rotation.hpp"
#include "keymotion/synth.hpp"
#include "keymotion/tape.hpp"
#include "keymotion/tensor.hpp"
#include "keymotion/train.hpp"
#include "keymotion/transformer.hpp"
