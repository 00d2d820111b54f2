import { DivrecClient } from './api.ts';
import { App } from './app.ts';

const root = document.getElementById('app');
if (root) {
  const app = new App(root, new DivrecClient(''));
  void app.start();
}
