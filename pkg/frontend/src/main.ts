import { HttpApiClient } from "./api.js";
import { LocalHistoryStorage, SessionStore } from "./store.js";
import { mount } from "./view.js";

const root = document.getElementById("app");
if (root) {
  const store = new SessionStore(new HttpApiClient(), new LocalHistoryStorage());
  mount(root, store);
}
