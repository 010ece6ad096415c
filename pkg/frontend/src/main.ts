import { ApiClient } from "./api.js";
import { mount } from "./app.js";
import { resolveConfig } from "./config.js";

const root = document.getElementById("app");
if (root) {
  void mount(root, new ApiClient(resolveConfig())).catch((error) => {
    root.textContent = `workbench failed to start: ${error}`;
  });
}
