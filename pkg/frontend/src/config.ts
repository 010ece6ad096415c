/** Service connection settings: base URL plus an optional bearer token. */

export interface WorkbenchConfig {
  baseUrl: string;
  token?: string;
}

interface ConfigCarrier {
  __WORKBENCH_CONFIG__?: Partial<WorkbenchConfig>;
}

/** Read config injected by the hosting page, defaulting to same-origin. */
export function resolveConfig(carrier?: ConfigCarrier): WorkbenchConfig {
  const source = carrier ?? (globalThis as ConfigCarrier);
  const injected = source.__WORKBENCH_CONFIG__ ?? {};
  const baseUrl = (injected.baseUrl ?? "").replace(/\/+$/, "");
  const config: WorkbenchConfig = { baseUrl };
  if (injected.token) {
    config.token = injected.token;
  }
  return config;
}
