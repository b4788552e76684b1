#pragma once

#include "ragpipe/benchgen.hpp"
#include "ragpipe/cli.hpp"
#include "ragpipe/clients.hpp"
#include "ragpipe/config.hpp"
#include "ragpipe/core.hpp"
#include "ragpipe/evaluation.hpp"
#include "ragpipe/http_clients.hpp"
#include "ragpipe/io.hpp"
#include "ragpipe/mock_clients.hpp"
#include "ragpipe/pipeline.hpp"
#include "ragpipe/prompts.hpp"
#include "ragpipe/remote_index.hpp"
#include "ragpipe/retrieval.hpp"
#include "ragpipe/routing.hpp"
#include "ragpipe/service.hpp"
#include "ragpipe/text.hpp"
#include "ragpipe/vector_store.hpp"
