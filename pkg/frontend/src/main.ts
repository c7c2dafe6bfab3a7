import { Client } from "./api.js";
import { wireUp } from "./app.js";

wireUp(document, new Client());
