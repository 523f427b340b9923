export { MissingColumnError, Table, column, readTable } from "./csv.js";
export {
  FIGURE_KINDS,
  FigureKind,
  buildOption,
  readInputs,
  renderFigure,
  renderOption,
} from "./figures.js";
export { run } from "./cli.js";
