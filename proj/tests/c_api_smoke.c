/*
 * Copyright (C) 2026 The hhm Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include <stdio.h>
#include <string.h>

#include "hhm/hhm.h"

int main(void) {
    hhm_config* cfg = NULL;
    char* text = NULL;
    uint64_t seed = 0;
    if (hhm_config_new(&cfg) != HHM_OK) return 1;
    if (hhm_config_set_seed(cfg, 42) != HHM_OK || hhm_config_seed(cfg, &seed) != HHM_OK || seed != 42) return 2;
    if (hhm_config_to_json(cfg, &text) != HHM_OK || strstr(text, "\"seed\": 42") == NULL) return 3;
    hhm_string_free(text);
    if (hhm_config_patch(cfg, "{\"bogus\": 1}") != HHM_ERR_CONFIG) return 4;
    if (strstr(hhm_last_error(), "bogus") == NULL) return 5;
    if (hhm_run_eval(NULL, NULL, NULL) != HHM_ERR_ARGUMENT) return 6;
    hhm_config_free(cfg);
    puts("c api ok");
    return 0;
}
