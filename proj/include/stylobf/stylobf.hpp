#pragma once

#include "attrib_net.hpp"
#include "bundle.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "igrad.hpp"
#include "obfuscate.hpp"
#include "postag.hpp"
#include "replace.hpp"
#include "rng.hpp"
#include "synthetic.hpp"
#include "tokenize.hpp"
#include "config.hpp"
