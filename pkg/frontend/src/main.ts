import { ApiClient } from "./api.js";
import { PivotApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://127.0.0.1:8080";
const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}
void new PivotApp(root, new ApiClient(base)).start();
