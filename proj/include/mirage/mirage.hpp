#pragma once
// Umbrella header: the whole engine in one include.

#include "mirage/audit.hpp"
#include "mirage/backend.hpp"
#include "mirage/config.hpp"
#include "mirage/coordinator.hpp"
#include "mirage/decomposer.hpp"
#include "mirage/embedding.hpp"
#include "mirage/error.hpp"
#include "mirage/evidence.hpp"
#include "mirage/http_backend.hpp"
#include "mirage/kg.hpp"
#include "mirage/linker.hpp"
#include "mirage/prompts.hpp"
#include "mirage/protocol.hpp"
#include "mirage/retriever.hpp"
#include "mirage/scripted_backend.hpp"
#include "mirage/synthesizer.hpp"
#include "mirage/synthetic.hpp"
#include "mirage/text.hpp"
#include "mirage/workspace.hpp"
