#include <stdio.h>
#include "sagin.h"

int main(void) {
    SaginEnv *env = NULL;
    if (sagin_env_new(NULL, 1, &env) != SAGIN_STATUS_OK) return 1;
    size_t agents = 0, obs = 0, actions = 0;
    if (sagin_env_dims(env, &agents, &obs, &actions) != SAGIN_STATUS_OK) return 2;
    uint32_t acts[64] = {0};
    if (agents > 64) return 3;
    for (int t = 0; t < 50; t++)
        if (sagin_env_step(env, acts, agents) != SAGIN_STATUS_OK) return 4;
    SaginMetrics m;
    if (sagin_env_metrics(env, &m) != SAGIN_STATUS_OK) return 5;
    if (m.generated != m.delivered + m.dropped + m.in_system) return 6;
    if (sagin_env_step(env, acts, agents + 1) != SAGIN_STATUS_DIMENSION) return 7;
    char msg[128];
    if (sagin_last_error(msg, sizeof msg) == 0) return 8;
    sagin_env_free(env);
    printf("ok %s %llu\n", sagin_version(), (unsigned long long)m.generated);
    return 0;
}
